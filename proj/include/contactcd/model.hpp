#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "contactcd/jets.hpp"
#include "json.hpp"

namespace contactcd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Point {
  Vector coords;
  Point() = default;
  explicit Point(Vector c) : coords(std::move(c)) {}
  static Point of(std::initializer_list<double> v) {
    Vector c(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) c[i++] = x;
    return Point(std::move(c));
  }
  int dim() const { return static_cast<int>(coords.size()); }
  std::span<const double> span() const {
    return {coords.data(), static_cast<size_t>(coords.size())};
  }
};

// w[i][j][k], gamma[i][j], delta[i][j] for i,j,k in [0, 2n)
struct BracketTable {
  int n = 1;
  std::vector<double> w;
  Matrix gamma, delta;

  explicit BracketTable(int n_)
      : n(n_),
        w(static_cast<size_t>(8 * n_ * n_ * n_), 0.0),
        gamma(Matrix::Zero(2 * n_, 2 * n_)),
        delta(Matrix::Zero(2 * n_, 2 * n_)) {}
  double& wref(int i, int j, int k) {
    const int h = 2 * n;
    return w[static_cast<size_t>((i * h + j) * h + k)];
  }
  double wval(int i, int j, int k) const {
    const int h = 2 * n;
    return w[static_cast<size_t>((i * h + j) * h + k)];
  }
};

struct ChartData {
  // frame[i][a] = coefficient of d/dx_a in field i; i < 2n horizontal, i = 2n is Z
  std::vector<std::vector<ScalarField>> frame;
  std::vector<Point> probes;
};

struct LieData {
  BracketTable table{1};
  // abstract algebra generators A_1..A_2n, A_Z (square, for serialization/validation)
  std::vector<Matrix> generators;
  // linear realization on R^D: field i is s -> field_mats[i] * s
  int ambient_dim = 0;
  std::vector<Matrix> field_mats;
  Vector start;
  bool unit_norm = false;  // |s| is preserved (quaternion realization)
  std::vector<std::vector<ScalarField>> frame;  // materialized linear coefficients
};

class ContactModel {
 public:
  std::string name;
  int n = 1;  // manifold dimension 2n+1
  std::map<std::string, double> params;
  std::variant<ChartData, LieData> backend;

  bool is_chart() const { return std::holds_alternative<ChartData>(backend); }
  const ChartData& chart() const { return std::get<ChartData>(backend); }
  const LieData& lie() const { return std::get<LieData>(backend); }

  int frame_count() const { return 2 * n + 1; }
  int ambient_dim() const {
    return is_chart() ? 2 * n + 1 : lie().ambient_dim;
  }
  const std::vector<std::vector<ScalarField>>& frame() const {
    return is_chart() ? chart().frame : lie().frame;
  }
  // origin for charts, group identity for Lie models
  Point base_point() const;
};

// ---- shipped models ----
ContactModel heisenberg_model(int n);
ContactModel twisted_model(double a, double b);
ContactModel su2_model();   // twisted(-1, 1), unit-quaternion realization
ContactModel sl2_model();   // twisted(1, -1)
// name in {heisenberg, twisted, su2type, sl2type}
ContactModel builtin_model(const std::string& name,
                           const std::map<std::string, double>& params = {});

struct ModelCatalogEntry {
  std::string name;
  std::string description;
  std::map<std::string, double> params;
  // regression targets reproduced by the live pipeline
  std::map<std::string, double> expected;
};
const std::vector<ModelCatalogEntry>& model_catalog();

// ---- serialization ----
nlohmann::json model_to_json(const ContactModel& m);
ContactModel model_from_json(const nlohmann::json& j);
ContactModel load_model(const std::string& path);
void save_model(const ContactModel& m, const std::string& path);
uint64_t model_hash(const ContactModel& m);

// field matrices for a matrix group acting by right multiplication,
// from abstract d x d generators: M = A^T (x) I, state = vec(identity)
LieData lie_realization_from_generators(int n, const std::vector<Matrix>& gens,
                                        const BracketTable& table);

}  // namespace contactcd
