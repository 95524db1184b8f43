#include "contactcd/model.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <sstream>

namespace contactcd {

namespace {

constexpr double kTableTol = 1e-12;

ScalarField linear_field(int dim, const Vector& row) {
  std::vector<PolyTerm> terms;
  for (int a = 0; a < dim; ++a) {
    if (row[a] == 0.0) continue;
    std::vector<int> p(static_cast<size_t>(dim), 0);
    p[static_cast<size_t>(a)] = 1;
    terms.push_back(PolyTerm{row[a], std::move(p)});
  }
  return ScalarField(dim, std::move(terms));
}

std::vector<std::vector<ScalarField>> materialize_linear_frame(
    const std::vector<Matrix>& mats) {
  std::vector<std::vector<ScalarField>> frame;
  for (const auto& M : mats) {
    std::vector<ScalarField> coeffs;
    const int D = static_cast<int>(M.rows());
    for (int a = 0; a < D; ++a) coeffs.push_back(linear_field(D, M.row(a)));
    frame.push_back(std::move(coeffs));
  }
  return frame;
}

void validate_table_shape(const BracketTable& t) {
  const int h = 2 * t.n;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) {
      if (std::abs(t.gamma(i, j) + t.gamma(j, i)) > kTableTol)
        throw Error("bracket table: gamma not antisymmetric");
      for (int k = 0; k < h; ++k)
        if (std::abs(t.wval(i, j, k) + t.wval(j, i, k)) > kTableTol)
          throw Error("bracket table: w not antisymmetric in (i,j)");
    }
  const Matrix gg = t.gamma * t.gamma.transpose() - Matrix::Identity(h, h);
  if (gg.cwiseAbs().maxCoeff() > 1e-10)
    throw Error("bracket table rejected: gamma*gamma^T != Id");
  for (int i = 0; i < h; ++i)
    if (std::abs(t.delta(i, i)) > 1e-10)
      throw Error("bracket table rejected: frame not delta-normalized "
                  "(delta_i^i != 0)");
}

// field-bracket convention for linear fields X_M(s) = Ms:
// [X_A, X_B] = X_{BA - AB}
void validate_field_mats(const LieData& lie) {
  const int h = 2 * lie.table.n;
  const auto& M = lie.field_mats;
  auto expect = [&](const Matrix& got, const Matrix& want, const char* what) {
    if ((got - want).cwiseAbs().maxCoeff() > 1e-10)
      throw Error(std::string("lie realization does not reproduce the bracket "
                              "table: ") + what);
  };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < h; ++j) {
      Matrix want = lie.table.gamma(i, j) * M[static_cast<size_t>(h)];
      for (int k = 0; k < h; ++k)
        want += lie.table.wval(i, j, k) * M[static_cast<size_t>(k)];
      expect(M[static_cast<size_t>(j)] * M[static_cast<size_t>(i)] -
                 M[static_cast<size_t>(i)] * M[static_cast<size_t>(j)],
             want, "[X_i, X_j]");
    }
    Matrix want = Matrix::Zero(lie.ambient_dim, lie.ambient_dim);
    for (int j = 0; j < h; ++j)
      want += lie.table.delta(i, j) * M[static_cast<size_t>(j)];
    expect(M[static_cast<size_t>(h)] * M[static_cast<size_t>(i)] -
               M[static_cast<size_t>(i)] * M[static_cast<size_t>(h)],
           want, "[X_i, Z]");
  }
}

void validate_generators(const std::vector<Matrix>& A, const BracketTable& t) {
  const int h = 2 * t.n;
  if (static_cast<int>(A.size()) != h + 1)
    throw Error("expected 2n+1 generators");
  const int d = static_cast<int>(A[0].rows());
  for (const auto& g : A)
    if (g.rows() != d || g.cols() != d)
      throw Error("generators must be square matrices of equal size");
  Matrix stacked(h + 1, d * d);
  for (int i = 0; i <= h; ++i)
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        stacked(i, p * d + q) = A[static_cast<size_t>(i)](p, q);
  Eigen::JacobiSVD<Matrix> svd(stacked);
  if (svd.rank() < h + 1)
    throw Error("generators are linearly dependent (degenerate realization)");
  auto comm = [](const Matrix& X, const Matrix& Y) { return X * Y - Y * X; };
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < h; ++j) {
      Matrix want = t.gamma(i, j) * A[static_cast<size_t>(h)];
      for (int k = 0; k < h; ++k)
        want += t.wval(i, j, k) * A[static_cast<size_t>(k)];
      if ((comm(A[static_cast<size_t>(i)], A[static_cast<size_t>(j)]) - want)
              .cwiseAbs()
              .maxCoeff() > kTableTol)
        throw Error("generator commutators do not reproduce the bracket table");
    }
    Matrix want = Matrix::Zero(d, d);
    for (int j = 0; j < h; ++j)
      want += t.delta(i, j) * A[static_cast<size_t>(j)];
    if ((comm(A[static_cast<size_t>(i)], A[static_cast<size_t>(h)]) - want)
            .cwiseAbs()
            .maxCoeff() > kTableTol)
      throw Error("generator [A_i, A_Z] does not reproduce the delta table");
  }
}

Matrix kron_t_identity(const Matrix& A) {
  // M = A^T (x) I_d acting on column-major vec: vec(Y A) = M vec(Y)
  const int d = static_cast<int>(A.rows());
  Matrix M = Matrix::Zero(d * d, d * d);
  for (int q = 0; q < d; ++q)
    for (int r = 0; r < d; ++r)
      for (int p = 0; p < d; ++p) M(p + d * q, p + d * r) = A(r, q);
  return M;
}

std::vector<Point> default_probes(int dim, uint64_t seed) {
  std::vector<Point> probes;
  probes.emplace_back(Vector::Zero(dim));
  uint64_t s = seed;
  auto next = [&]() {
    s += 0x9e3779b97f4a7c15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
  };
  for (int k = 0; k < 8; ++k) {
    Vector v(dim);
    for (int a = 0; a < dim; ++a) v[a] = next();
    probes.emplace_back(std::move(v));
  }
  return probes;
}

void validate_chart_probes(const ChartData& c, int dim) {
  for (const auto& p : c.probes) {
    if (p.dim() != dim) throw Error("probe dimension mismatch");
    Matrix F(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int a = 0; a < dim; ++a)
        F(a, i) = c.frame[static_cast<size_t>(i)][static_cast<size_t>(a)].eval(
            p.span());
    Eigen::JacobiSVD<Matrix> svd(F);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12)
      throw Error("chart frame matrix singular at a probe point");
  }
}

}  // namespace

Point ContactModel::base_point() const {
  if (is_chart()) return Point(Vector::Zero(2 * n + 1));
  return Point(lie().start);
}

LieData lie_realization_from_generators(int n, const std::vector<Matrix>& gens,
                                        const BracketTable& table) {
  if (table.n != n) throw Error("bracket table size does not match n");
  validate_table_shape(table);
  validate_generators(gens, table);
  LieData lie;
  lie.table = table;
  lie.generators = gens;
  const int d = static_cast<int>(gens[0].rows());
  lie.ambient_dim = d * d;
  for (const auto& A : gens) lie.field_mats.push_back(kron_t_identity(A));
  Matrix id = Matrix::Identity(d, d);
  lie.start = Eigen::Map<Vector>(id.data(), d * d);
  lie.frame = materialize_linear_frame(lie.field_mats);
  validate_field_mats(lie);
  return lie;
}

ContactModel heisenberg_model(int n) {
  if (n < 1) throw Error("heisenberg: n must be >= 1");
  const int dim = 2 * n + 1;
  ChartData chart;
  // X_i = d/dx_i - (y_i/2) d/dz,  X_{n+i} = d/dy_i + (x_i/2) d/dz,  Z = d/dz
  for (int i = 0; i < n; ++i) {
    std::vector<ScalarField> c(static_cast<size_t>(dim), ScalarField::zero(dim));
    c[static_cast<size_t>(i)] = ScalarField::constant(dim, 1.0);
    c[static_cast<size_t>(dim - 1)] =
        ScalarField::coordinate(dim, n + i) * (-0.5);
    chart.frame.push_back(std::move(c));
  }
  for (int i = 0; i < n; ++i) {
    std::vector<ScalarField> c(static_cast<size_t>(dim), ScalarField::zero(dim));
    c[static_cast<size_t>(n + i)] = ScalarField::constant(dim, 1.0);
    c[static_cast<size_t>(dim - 1)] = ScalarField::coordinate(dim, i) * 0.5;
    chart.frame.push_back(std::move(c));
  }
  {
    std::vector<ScalarField> c(static_cast<size_t>(dim), ScalarField::zero(dim));
    c[static_cast<size_t>(dim - 1)] = ScalarField::constant(dim, 1.0);
    chart.frame.push_back(std::move(c));
  }
  chart.probes = default_probes(dim, 41);
  validate_chart_probes(chart, dim);

  ContactModel m;
  m.name = "heisenberg(" + std::to_string(n) + ")";
  m.n = n;
  m.params = {{"n", static_cast<double>(n)}};
  m.backend = std::move(chart);
  return m;
}

namespace {

BracketTable twisted_table(double a, double b) {
  BracketTable t(1);
  t.gamma(0, 1) = 1.0;
  t.gamma(1, 0) = -1.0;
  t.delta(0, 1) = a;
  t.delta(1, 0) = b;
  return t;
}

std::vector<Matrix> twisted_adjoint_generators(double a, double b) {
  // ad matrices in the basis (X1, X2, Z); faithful iff (a,b) != (0,0)
  Matrix A1 = Matrix::Zero(3, 3), A2 = Matrix::Zero(3, 3), AZ = Matrix::Zero(3, 3);
  A1(2, 1) = 1.0;   // ad_{X1} X2 = Z
  A1(1, 2) = a;     // ad_{X1} Z  = a X2
  A2(2, 0) = -1.0;  // ad_{X2} X1 = -Z
  A2(0, 2) = b;     // ad_{X2} Z  = b X1
  AZ(1, 0) = -a;    // ad_Z X1 = -a X2
  AZ(0, 1) = -b;    // ad_Z X2 = -b X1
  return {A1, A2, AZ};
}

std::vector<Matrix> heisenberg_nilpotent_generators() {
  // strictly upper triangular 3x3: [A1, A2] = AZ central
  Matrix A1 = Matrix::Zero(3, 3), A2 = Matrix::Zero(3, 3), AZ = Matrix::Zero(3, 3);
  A1(0, 1) = 1.0;
  A2(1, 2) = 1.0;
  AZ(0, 2) = 1.0;
  return {A1, A2, AZ};
}

Matrix quaternion_right_mult(double w, double x, double y, double z) {
  // q -> q * a with a = (w, x, y, z), quaternion coordinates (1, i, j, k)
  Matrix M(4, 4);
  M << w, -x, -y, -z,
       x,  w,  z, -y,
       y, -z,  w,  x,
       z,  y, -x,  w;
  return M;
}

}  // namespace

ContactModel twisted_model(double a, double b) {
  const BracketTable t = twisted_table(a, b);
  std::vector<Matrix> gens = (a == 0.0 && b == 0.0)
                                 ? heisenberg_nilpotent_generators()
                                 : twisted_adjoint_generators(a, b);
  LieData lie = lie_realization_from_generators(1, gens, t);

  ContactModel m;
  std::ostringstream nm;
  nm << "twisted(" << a << "," << b << ")";
  m.name = nm.str();
  m.n = 1;
  m.params = {{"a", a}, {"b", b}, {"non_sasakian", a + b != 0.0 ? 1.0 : 0.0}};
  m.backend = std::move(lie);
  return m;
}

ContactModel su2_model() {
  // twisted(-1, 1) on unit quaternions: A1 = i/2, A2 = j/2, AZ = k/2 acting
  // by right multiplication on R^4; |s| = 1 is preserved exactly.
  const BracketTable t = twisted_table(-1.0, 1.0);
  LieData lie;
  lie.table = t;
  lie.generators = twisted_adjoint_generators(-1.0, 1.0);  // so(3), serialization
  lie.ambient_dim = 4;
  lie.field_mats = {quaternion_right_mult(0, 0.5, 0, 0),
                    quaternion_right_mult(0, 0, 0.5, 0),
                    quaternion_right_mult(0, 0, 0, 0.5)};
  lie.start = Vector::Zero(4);
  lie.start[0] = 1.0;
  lie.unit_norm = true;
  lie.frame = materialize_linear_frame(lie.field_mats);
  validate_table_shape(lie.table);
  validate_field_mats(lie);

  ContactModel m;
  m.name = "su2type";
  m.n = 1;
  m.params = {{"a", -1.0}, {"b", 1.0}};
  m.backend = std::move(lie);
  return m;
}

ContactModel sl2_model() {
  ContactModel m = twisted_model(1.0, -1.0);
  m.name = "sl2type";
  return m;
}

ContactModel builtin_model(const std::string& name,
                           const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
  };
  if (name == "heisenberg")
    return heisenberg_model(static_cast<int>(get("n", 1)));
  if (name == "twisted") return twisted_model(get("a", 0.0), get("b", 1.0));
  if (name == "su2type") return su2_model();
  if (name == "sl2type") return sl2_model();
  throw Error("unknown builtin model: " + name);
}

const std::vector<ModelCatalogEntry>& model_catalog() {
  static const std::vector<ModelCatalogEntry> catalog = {
      {"heisenberg",
       "flat Sasakian chart model on R^(2n+1)",
       {{"n", 1}},
       {{"c1", 0}, {"c2", 0}, {"c3", 0}, {"iota", 0}, {"alpha", 0},
        {"rho1", 0}, {"rho2", 0.5}, {"rho3", 0}}},
      {"twisted",
       "constant-structure family: gamma12=1, delta_1^2=a, delta_2^1=b",
       {{"a", 0}, {"b", 1}},
       {{"c1", 0}, {"c2", 0}, {"c3", 0}, {"iota", 0.25}, {"alpha", 0.5}}},
      {"su2type",
       "twisted(-1,1); compact, unit-quaternion realization",
       {},
       {{"c1", 1}, {"c2", 0}, {"c3", 0}, {"iota", 0}, {"alpha", 0},
        {"gap", 1.0 / 3.0}, {"poincare", 3.0}, {"sigma", 2.0 / 3.0},
        {"myers_margin", 1.0 / 3.0}}},
      {"sl2type",
       "twisted(1,-1); negative curvature bound, no certificates",
       {},
       {{"c1", -1}, {"c2", 0}, {"c3", 0}, {"iota", 0}, {"alpha", 0}}},
  };
  return catalog;
}

// ---------------- serialization ----------------

namespace {

nlohmann::json poly_to_json(const ScalarField& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : f.terms())
    terms.push_back({{"coeff", t.coeff}, {"powers", t.powers}});
  return terms;
}

ScalarField poly_from_json(int dim, const nlohmann::json& j) {
  std::vector<PolyTerm> terms;
  for (const auto& t : j) {
    PolyTerm term;
    term.coeff = t.at("coeff").get<double>();
    term.powers = t.at("powers").get<std::vector<int>>();
    if (static_cast<int>(term.powers.size()) != dim)
      throw Error("model JSON: polynomial powers length != ambient dim");
    terms.push_back(std::move(term));
  }
  return ScalarField(dim, std::move(terms));
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const int r = static_cast<int>(j.size());
  if (r == 0) throw Error("model JSON: empty matrix");
  const int c = static_cast<int>(j[0].size());
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(j[static_cast<size_t>(i)].size()) != c)
      throw Error("model JSON: ragged matrix");
    for (int k = 0; k < c; ++k)
      m(i, k) = j[static_cast<size_t>(i)][static_cast<size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json model_to_json(const ContactModel& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["n"] = m.n;
  if (m.is_chart()) {
    j["backend"] = "chart";
    nlohmann::json frame = nlohmann::json::array();
    const int dim = 2 * m.n + 1;
    for (int i = 0; i < dim; ++i) {
      nlohmann::json field = nlohmann::json::array();
      for (int a = 0; a < dim; ++a)
        field.push_back(poly_to_json(
            m.chart().frame[static_cast<size_t>(i)][static_cast<size_t>(a)]));
      frame.push_back(field);
    }
    j["frame"] = frame;
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : m.chart().probes) {
      nlohmann::json pt = nlohmann::json::array();
      for (int a = 0; a < p.dim(); ++a) pt.push_back(p.coords[a]);
      probes.push_back(pt);
    }
    j["probes"] = probes;
  } else {
    j["backend"] = "lie";
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& A : m.lie().generators) gens.push_back(matrix_to_json(A));
    j["generators"] = gens;
    const auto& t = m.lie().table;
    const int h = 2 * t.n;
    nlohmann::json w = nlohmann::json::array();
    for (int i = 0; i < h; ++i) {
      nlohmann::json wi = nlohmann::json::array();
      for (int jj = 0; jj < h; ++jj) {
        nlohmann::json wij = nlohmann::json::array();
        for (int k = 0; k < h; ++k) wij.push_back(t.wval(i, jj, k));
        wi.push_back(wij);
      }
      w.push_back(wi);
    }
    j["brackets"] = {{"w", w},
                     {"gamma", matrix_to_json(t.gamma)},
                     {"delta", matrix_to_json(t.delta)}};
  }
  return j;
}

ContactModel model_from_json(const nlohmann::json& j) {
  ContactModel m;
  m.name = j.value("name", "model");
  if (!j.contains("n")) throw Error("model JSON: missing n");
  m.n = j.at("n").get<int>();
  if (m.n < 1) throw Error("model JSON: n must be >= 1");
  const std::string backend = j.at("backend").get<std::string>();
  if (backend == "chart") {
    const int dim = 2 * m.n + 1;
    ChartData chart;
    const auto& frame = j.at("frame");
    if (static_cast<int>(frame.size()) != dim)
      throw Error("model JSON: chart frame must have 2n+1 fields");
    for (const auto& field : frame) {
      if (static_cast<int>(field.size()) != dim)
        throw Error("model JSON: each field needs 2n+1 coefficient polynomials");
      std::vector<ScalarField> coeffs;
      for (const auto& poly : field) coeffs.push_back(poly_from_json(dim, poly));
      chart.frame.push_back(std::move(coeffs));
    }
    if (j.contains("probes")) {
      for (const auto& pt : j.at("probes")) {
        Vector v(dim);
        if (static_cast<int>(pt.size()) != dim)
          throw Error("model JSON: probe dimension mismatch");
        for (int a = 0; a < dim; ++a)
          v[a] = pt[static_cast<size_t>(a)].get<double>();
        chart.probes.emplace_back(std::move(v));
      }
    } else {
      chart.probes = default_probes(dim, 41);
    }
    validate_chart_probes(chart, dim);
    m.backend = std::move(chart);
  } else if (backend == "lie") {
    const int h = 2 * m.n;
    BracketTable t(m.n);
    const auto& br = j.at("brackets");
    const auto& w = br.at("w");
    if (static_cast<int>(w.size()) != h)
      throw Error("model JSON: w table must be (2n)^3");
    for (int i = 0; i < h; ++i)
      for (int jj = 0; jj < h; ++jj)
        for (int k = 0; k < h; ++k)
          t.wref(i, jj, k) = w[static_cast<size_t>(i)][static_cast<size_t>(jj)]
                              [static_cast<size_t>(k)].get<double>();
    t.gamma = matrix_from_json(br.at("gamma"));
    t.delta = matrix_from_json(br.at("delta"));
    if (t.gamma.rows() != h || t.gamma.cols() != h || t.delta.rows() != h ||
        t.delta.cols() != h)
      throw Error("model JSON: gamma/delta must be 2n x 2n");
    std::vector<Matrix> gens;
    for (const auto& g : j.at("generators")) gens.push_back(matrix_from_json(g));
    m.backend = lie_realization_from_generators(m.n, gens, t);
  } else {
    throw Error("model JSON: backend must be 'chart' or 'lie'");
  }
  return m;
}

ContactModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("model JSON parse error: " + std::string(e.what()));
  }
  return model_from_json(j);
}

void save_model(const ContactModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path);
  out << model_to_json(m).dump(2) << "\n";
}

uint64_t model_hash(const ContactModel& m) {
  const std::string dump = model_to_json(m).dump();
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace contactcd
