#include "pulse/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>

#include "pulse/errors.hpp"
#include "pulse/random.hpp"

namespace pulse {
namespace {

constexpr std::uint64_t kDirectionSampleSeed = 0x5eed5eed5eedULL;

double cross2(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

void add_axes(int dim, std::vector<Vec>& out) {
  for (int i = 0; i < dim; ++i) {
    out.push_back(Vec::Unit(dim, i));
    out.push_back(-Vec::Unit(dim, i));
  }
}

// Wolfe's minimum-norm-point iteration on the translated vertices p_i - x.
double hull_distance(const std::vector<Vec>& vertices, const Vec& x) {
  const auto n = vertices.size();
  std::vector<Vec> p;
  p.reserve(n);
  double scale = 0.0;
  for (const auto& v : vertices) {
    p.push_back(v - x);
    scale = std::max(scale, p.back().squaredNorm());
  }
  const double eps = 1e-14 * std::max(scale, 1e-300);
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (p[i].squaredNorm() < p[first].squaredNorm()) first = i;
  }
  std::vector<std::size_t> active{first};
  std::vector<double> lambda{1.0};
  Vec point = p[first];
  for (int major = 0; major < 1000; ++major) {
    std::size_t j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = point.dot(p[i]);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    if (point.squaredNorm() - best <= eps) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lambda.push_back(0.0);
    for (int minor = 0; minor < 1000; ++minor) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = p[active[a]].dot(p[active[b]]);
        kkt(a, k) = kkt(k, a) = 1.0;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs[k] = 1.0;
      const Eigen::VectorXd alpha = kkt.completeOrthogonalDecomposition().solve(rhs);
      bool interior = true;
      for (Eigen::Index a = 0; a < k; ++a) interior = interior && alpha[a] > 1e-14;
      if (interior) {
        for (Eigen::Index a = 0; a < k; ++a) lambda[a] = alpha[a];
        break;
      }
      double theta = 1.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        if (alpha[a] <= 1e-14) theta = std::min(theta, lambda[a] / (lambda[a] - alpha[a]));
      }
      std::vector<std::size_t> kept;
      std::vector<double> kept_lambda;
      for (Eigen::Index a = 0; a < k; ++a) {
        const double l = lambda[a] + theta * (alpha[a] - lambda[a]);
        if (l > 1e-14) {
          kept.push_back(active[a]);
          kept_lambda.push_back(l);
        }
      }
      active = std::move(kept);
      lambda = std::move(kept_lambda);
      if (active.size() <= 1) break;
    }
    double total = 0.0;
    for (double l : lambda) total += l;
    point = Vec::Zero(x.size());
    for (std::size_t a = 0; a < active.size(); ++a) point += (lambda[a] / total) * p[active[a]];
  }
  return point.norm();
}

std::vector<Vec> sampled_directions(int dim) {
  std::vector<Vec> out;
  add_axes(dim, out);
  Rng rng(kDirectionSampleSeed);
  for (int i = 0; i < 64 * dim; ++i) out.push_back(rng.unit_vector(dim));
  return out;
}

std::vector<Vec> hull_normals_2d(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a == b; }),
            pts.end());
  std::vector<Vec> normals;
  if (pts.size() == 1) {
    add_axes(2, normals);
    return normals;
  }
  // Andrew's monotone chain, counter-clockwise, collinear points dropped.
  std::vector<Vec> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    // Degenerate: a segment. Its own direction and the perpendicular suffice.
    Vec along = pts.back() - pts.front();
    along.normalize();
    Vec perp(2);
    perp << -along[1], along[0];
    normals = {along, -along, perp, -perp};
    return normals;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec edge = hull[(i + 1) % hull.size()] - hull[i];
    Vec n(2);
    n << edge[1], -edge[0];
    normals.push_back(n.normalized());
  }
  return normals;
}

std::vector<Vec> hull_normals_3d(const std::vector<Vec>& pts) {
  double scale = 1.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * scale;
  std::vector<Vec> normals;
  const auto add_unique = [&normals](const Vec& n) {
    for (const auto& m : normals) {
      if (m.dot(n) > 1.0 - 1e-12) return;
    }
    normals.push_back(n);
  };
  const std::size_t v = pts.size();
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t j = i + 1; j < v; ++j) {
      for (std::size_t k = j + 1; k < v; ++k) {
        const Eigen::Vector3d a = pts[j] - pts[i];
        const Eigen::Vector3d b = pts[k] - pts[i];
        Eigen::Vector3d n = a.cross(b);
        if (n.norm() <= eps * eps) continue;
        n.normalize();
        bool above = false;
        bool below = false;
        for (const auto& p : pts) {
          const double side = n.dot(Eigen::Vector3d(p - pts[i]));
          above |= side > eps;
          below |= side < -eps;
        }
        if (above && below) continue;
        if (!above && !below) continue;  // all coplanar
        add_unique(above ? Vec(-n) : Vec(n));
      }
    }
  }
  return normals;
}

std::vector<Vec> polytope_normals(const std::vector<Vec>& vertices, int dim) {
  if (dim == 1) return {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  if (dim == 2) return hull_normals_2d(vertices);
  if (dim == 3) {
    auto normals = hull_normals_3d(vertices);
    if (normals.size() >= 4) return normals;
  }
  return sampled_directions(dim);
}

}  // namespace

ConvexSet ConvexSet::box(Vec lower, Vec upper) {
  if (lower.size() == 0 || lower.size() != upper.size()) {
    throw ContractViolation("ConvexSet::box: bounds must have equal, positive dimension");
  }
  if (!lower.allFinite() || !upper.allFinite() || (lower.array() > upper.array()).any()) {
    throw ContractViolation("ConvexSet::box: need finite bounds with lower <= upper");
  }
  return ConvexSet(Box{std::move(lower), std::move(upper)});
}

ConvexSet ConvexSet::ball(Vec center, double radius) {
  if (center.size() == 0 || !center.allFinite()) {
    throw ContractViolation("ConvexSet::ball: center must be a finite vector");
  }
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw ContractViolation("ConvexSet::ball: radius must be finite and non-negative");
  }
  return ConvexSet(Ball{std::move(center), radius});
}

ConvexSet ConvexSet::polytope(std::vector<Vec> vertices) {
  if (vertices.empty()) throw ContractViolation("ConvexSet::polytope: need at least one vertex");
  const auto dim = vertices.front().size();
  for (const auto& v : vertices) {
    if (v.size() != dim || dim == 0 || !v.allFinite()) {
      throw ContractViolation("ConvexSet::polytope: malformed vertex");
    }
  }
  auto normals = polytope_normals(vertices, static_cast<int>(dim));
  return ConvexSet(Polytope{std::move(vertices), std::move(normals)});
}

ConvexSet::Kind ConvexSet::kind() const noexcept {
  switch (shape_.index()) {
    case 0:
      return Kind::box;
    case 1:
      return Kind::ball;
    default:
      return Kind::polytope;
  }
}

int ConvexSet::dim() const noexcept {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) return static_cast<int>(s.lower.size());
        if constexpr (std::is_same_v<T, Ball>) return static_cast<int>(s.center.size());
        if constexpr (std::is_same_v<T, Polytope>) return static_cast<int>(s.vertices.front().size());
      },
      shape_);
}

void ConvexSet::check_dim(const Vec& v, const char* op) const {
  if (v.size() != dim()) {
    std::ostringstream msg;
    msg << "ConvexSet::" << op << ": vector of dimension " << v.size() << ", set of dimension "
        << dim();
    throw ContractViolation(msg.str());
  }
}

double ConvexSet::support(const Vec& d) const {
  check_dim(d, "support");
  return std::visit(
      [&d](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          double acc = 0.0;
          for (Eigen::Index i = 0; i < d.size(); ++i) {
            acc += (d[i] > 0.0 ? s.upper[i] : s.lower[i]) * d[i];
          }
          return acc;
        } else if constexpr (std::is_same_v<T, Ball>) {
          return s.center.dot(d) + s.radius * d.norm();
        } else {
          double best = -std::numeric_limits<double>::infinity();
          for (const auto& v : s.vertices) best = std::max(best, v.dot(d));
          return best;
        }
      },
      shape_);
}

Vec ConvexSet::extreme_point(const Vec& d) const {
  check_dim(d, "extreme_point");
  const double dn = d.norm();
  if (!(dn > 0.0)) throw DomainError("ConvexSet::extreme_point: zero direction");
  return std::visit(
      [&d, dn](const auto& s) -> Vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          Vec x(d.size());
          for (Eigen::Index i = 0; i < d.size(); ++i) x[i] = d[i] > 0.0 ? s.upper[i] : s.lower[i];
          return x;
        } else if constexpr (std::is_same_v<T, Ball>) {
          return s.center + (s.radius / dn) * d;
        } else {
          std::size_t best = 0;
          double best_value = s.vertices[0].dot(d);
          for (std::size_t i = 1; i < s.vertices.size(); ++i) {
            const double v = s.vertices[i].dot(d);
            if (v > best_value) {
              best_value = v;
              best = i;
            }
          }
          return s.vertices[best];
        }
      },
      shape_);
}

bool ConvexSet::contains(const Vec& x, double tol) const {
  check_dim(x, "contains");
  return std::visit(
      [this, &x, tol](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return ((x - s.lower).array() >= -tol).all() && ((s.upper - x).array() >= -tol).all();
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (x - s.center).norm() <= s.radius + tol;
        } else {
          for (const auto& n : s.normals) {
            if (x.dot(n) > support(n) + tol) return false;
          }
          return true;
        }
      },
      shape_);
}

double ConvexSet::distance(const Vec& x) const {
  check_dim(x, "distance");
  return std::visit(
      [this, &x](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return (x - x.cwiseMax(s.lower).cwiseMin(s.upper)).norm();
        } else if constexpr (std::is_same_v<T, Ball>) {
          return std::max(0.0, (x - s.center).norm() - s.radius);
        } else {
          if (x.size() <= 3) {
            double worst = 0.0;
            for (const auto& n : s.normals) worst = std::max(worst, x.dot(n) - support(n));
            if (worst == 0.0) return 0.0;
          }
          return hull_distance(s.vertices, x);
        }
      },
      shape_);
}

double ConvexSet::max_norm() const {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return s.lower.cwiseAbs().cwiseMax(s.upper.cwiseAbs()).norm();
        } else if constexpr (std::is_same_v<T, Ball>) {
          return s.center.norm() + s.radius;
        } else {
          double best = 0.0;
          for (const auto& v : s.vertices) best = std::max(best, v.norm());
          return best;
        }
      },
      shape_);
}

Vec ConvexSet::center() const {
  return std::visit(
      [](const auto& s) -> Vec {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Box>) {
          return 0.5 * (s.lower + s.upper);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return s.center;
        } else {
          Vec c = Vec::Zero(s.vertices.front().size());
          for (const auto& v : s.vertices) c += v;
          return c / static_cast<double>(s.vertices.size());
        }
      },
      shape_);
}

const Vec& ConvexSet::lower() const { return std::get<Box>(shape_).lower; }
const Vec& ConvexSet::upper() const { return std::get<Box>(shape_).upper; }
const Vec& ConvexSet::ball_center() const { return std::get<Ball>(shape_).center; }
double ConvexSet::radius() const { return std::get<Ball>(shape_).radius; }
const std::vector<Vec>& ConvexSet::vertices() const { return std::get<Polytope>(shape_).vertices; }

SetField::SetField(int dim, Evaluator values, Growth growth)
    : dim_(dim), values_(std::move(values)), growth_(std::move(growth)) {
  if (dim_ < 1) throw ContractViolation("SetField: dimension must be positive");
  if (!values_ || !growth_) throw ContractViolation("SetField: evaluators must be callable");
}

ConvexSet SetField::operator()(double t, const Vec& y) const {
  if (y.size() != dim_) throw ContractViolation("SetField: state has the wrong dimension");
  ConvexSet s = values_(t, y);
  if (s.dim() != dim_) throw ContractViolation("SetField: value has the wrong dimension");
  return s;
}

Selection::Selection(std::string label, PieceEvaluator eval, std::vector<double> breakpoints,
                     AuditSlack slack)
    : label_(std::move(label)),
      eval_(std::move(eval)),
      breakpoints_(std::move(breakpoints)),
      audit_slack_(slack) {
  if (!eval_) throw ContractViolation("Selection: evaluator must be callable");
  if (!std::is_sorted(breakpoints_.begin(), breakpoints_.end())) {
    throw ContractViolation("Selection: breakpoints must be sorted");
  }
}

std::size_t Selection::piece_at(double t) const {
  return static_cast<std::size_t>(
      std::distance(breakpoints_.begin(), std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t)));
}

Vec Selection::operator()(double t, const Vec& y) const { return eval_(piece_at(t), t, y); }

bool Selection::audit(const SetField& field, double t, const Vec& y, const Vec& value) const {
  if (!value.allFinite()) return false;
  const ConvexSet set = field(t, y);
  if (exact()) return set.contains(value, 1e-9 * (1.0 + value.norm()));
  const double slack = audit_slack_.absolute + audit_slack_.growth_scaled * field.growth(t);
  return set.distance(value) <= slack;
}

bool BoundingBox::contains(const Vec& y, double tol) const {
  if (y.size() != lower.size()) return false;
  return ((y - lower).array() >= -tol).all() && ((upper - y).array() >= -tol).all();
}

BoundingBox BoundingBox::intersect(const BoundingBox& other) const {
  if (other.dim() != dim()) throw ContractViolation("BoundingBox: dimension mismatch");
  return {lower.cwiseMax(other.lower), upper.cwiseMin(other.upper)};
}

DirectionSchedule DirectionSchedule::random(int dim, double horizon, std::uint64_t seed,
                                            int switches) {
  if (switches < 0) throw ContractViolation("DirectionSchedule: switch count must be >= 0");
  if (dim < 1) throw ContractViolation("DirectionSchedule: dimension must be positive");
  Rng rng(seed);
  DirectionSchedule s;
  for (int i = 0; i < switches; ++i) s.switch_times.push_back(rng.uniform(0.0, horizon));
  std::sort(s.switch_times.begin(), s.switch_times.end());
  for (int i = 0; i <= switches; ++i) s.directions.push_back(rng.unit_vector(dim));
  return s;
}

Selection select_zero(const SetField& field) {
  const int dim = field.dim();
  return Selection("zero", [dim](std::size_t, double, const Vec&) { return Vec(Vec::Zero(dim)); });
}

Selection select_center(const SetField& field) {
  return Selection("center",
                   [field](std::size_t, double t, const Vec& y) { return field(t, y).center(); });
}

Selection select_extreme(const SetField& field, const Vec& direction) {
  if (direction.size() != field.dim()) {
    throw ContractViolation("select_extreme: direction has the wrong dimension");
  }
  if (!(direction.norm() > 0.0)) throw DomainError("select_extreme: zero direction");
  std::ostringstream label;
  label << "extreme:";
  for (Eigen::Index i = 0; i < direction.size(); ++i) label << (i ? "," : "") << direction[i];
  return Selection(label.str(), [field, direction](std::size_t, double t, const Vec& y) {
    return field(t, y).extreme_point(direction);
  });
}

Selection select_schedule(const SetField& field, const DirectionSchedule& schedule,
                          std::string label) {
  if (schedule.directions.size() != schedule.switch_times.size() + 1) {
    throw ContractViolation("select_schedule: need one more direction than switch times");
  }
  for (const auto& d : schedule.directions) {
    if (d.size() != field.dim() || !(d.norm() > 0.0)) {
      throw ContractViolation("select_schedule: malformed direction");
    }
  }
  auto directions = schedule.directions;
  return Selection(
      std::move(label),
      [field, directions = std::move(directions)](std::size_t piece, double t, const Vec& y) {
        return field(t, y).extreme_point(directions[std::min(piece, directions.size() - 1)]);
      },
      schedule.switch_times);
}

Selection select_random(const SetField& field, double horizon, std::uint64_t seed, int switches) {
  std::ostringstream label;
  label << "bangbang:" << switches << "@" << seed;
  return select_schedule(field, DirectionSchedule::random(field.dim(), horizon, seed, switches),
                         label.str());
}

Selection mollify(const SetField& field, int n, const BoundingBox& box) {
  return mollify(field, n, box, select_center(field));
}

Selection mollify(const SetField& field, int n, const BoundingBox& box, const Selection& anchor) {
  if (n < 1) throw ContractViolation("mollify: level must be >= 1");
  const int dim = field.dim();
  if (box.dim() != dim) throw ContractViolation("mollify: box has the wrong dimension");
  if (!box.lower.allFinite() || !box.upper.allFinite() ||
      !(box.lower.array() < box.upper.array()).all()) {
    throw ContractViolation("mollify: box must be bounded with nonempty interior");
  }
  const double spacing = 1.0 / n;
  std::vector<std::int64_t> cells(dim);
  for (int i = 0; i < dim; ++i) {
    const double extent = std::ceil((box.upper[i] - box.lower[i]) * n - 1e-9);
    if (!(extent < 1e15)) throw ContractViolation("mollify: box too large for the grid");
    cells[i] = std::max<std::int64_t>(1, static_cast<std::int64_t>(extent));
  }
  const double scale = 1.0 + std::max(box.lower.cwiseAbs().maxCoeff(), box.upper.cwiseAbs().maxCoeff());
  const double box_tol = 1e-12 * scale;

  auto eval = [anchor, box, cells, n, spacing, dim, box_tol](std::size_t piece, double t,
                                                            const Vec& y) -> Vec {
    if (y.size() != dim || !box.contains(y, box_tol)) {
      std::ostringstream msg;
      msg << "mollify: state outside the anchor box at t = " << t;
      throw ExtrapolationError(msg.str());
    }
    std::vector<std::int64_t> cell(dim);
    Vec frac(dim);
    for (int i = 0; i < dim; ++i) {
      const double x = (y[i] - box.lower[i]) * n;
      cell[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(x)), 0, cells[i] - 1);
      frac[i] = std::clamp(x - static_cast<double>(cell[i]), 0.0, 1.0);
    }
    Vec out = Vec::Zero(dim);
    Vec node(dim);
    for (unsigned mask = 0; mask < (1u << dim); ++mask) {
      double weight = 1.0;
      for (int i = 0; i < dim; ++i) {
        const bool upper = (mask >> i) & 1u;
        weight *= upper ? frac[i] : 1.0 - frac[i];
        node[i] = box.lower[i] + static_cast<double>(cell[i] + (upper ? 1 : 0)) * spacing;
      }
      if (weight == 0.0) continue;
      out += weight * anchor.on_piece(piece, t, node);
    }
    return out;
  };

  std::ostringstream label;
  label << "mollified:" << n << "[" << anchor.label() << "]";
  std::vector<double> breakpoints(anchor.breakpoints().begin(), anchor.breakpoints().end());
  Selection::AuditSlack slack{1e-9, std::sqrt(static_cast<double>(dim)) / n};
  return Selection(label.str(), std::move(eval), std::move(breakpoints), slack);
}

}  // namespace pulse
