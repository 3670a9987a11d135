#pragma once

// Convex set values, set-valued right-hand sides and their single-valued
// selections, including partition-of-unity (mollified) selections.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pulse/types.hpp"

namespace pulse {

/// Compact convex subset of R^N accessed through its support function.
class ConvexSet {
 public:
  enum class Kind { box, ball, polytope };

  static ConvexSet box(Vec lower, Vec upper);
  static ConvexSet ball(Vec center, double radius);
  /// Convex hull of the given vertices.
  static ConvexSet polytope(std::vector<Vec> vertices);
  static ConvexSet point(const Vec& p) { return box(p, p); }

  Kind kind() const noexcept;
  int dim() const noexcept;

  /// max over x in the set of x . d. `d` need not be a unit vector.
  double support(const Vec& d) const;
  /// A maximizer of x . d; throws DomainError for d == 0.
  Vec extreme_point(const Vec& d) const;
  /// x . d <= support(d) + tol over the set's test directions. Exact for boxes
  /// and balls; for polytopes the directions are the facet normals of the hull
  /// in dimension <= 3 and a fixed sample of 64 N directions above that, in
  /// which case points slightly outside may be accepted.
  bool contains(const Vec& x, double tol) const;
  /// Euclidean distance to the set. Polytopes project onto the vertex hull.
  double distance(const Vec& x) const;
  /// sup over x in the set of |x|, i.e. the support over all unit directions.
  double max_norm() const;
  /// Canonical interior selection: box midpoint, ball center, vertex average.
  Vec center() const;

  const Vec& lower() const;
  const Vec& upper() const;
  const Vec& ball_center() const;
  double radius() const;
  const std::vector<Vec>& vertices() const;

 private:
  struct Box {
    Vec lower;
    Vec upper;
  };
  struct Ball {
    Vec center;
    double radius;
  };
  struct Polytope {
    std::vector<Vec> vertices;
    std::vector<Vec> normals;
  };

  explicit ConvexSet(std::variant<Box, Ball, Polytope> shape) : shape_(std::move(shape)) {}
  void check_dim(const Vec& v, const char* op) const;

  std::variant<Box, Ball, Polytope> shape_;
};

/// Set-valued right-hand side F(t, y) with its declared growth coefficient
/// alpha(t), i.e. sup |F(t,y)| <= alpha(t) (1 + |y|) is expected to hold.
class SetField {
 public:
  using Evaluator = std::function<ConvexSet(double, const Vec&)>;
  using Growth = std::function<double(double)>;

  SetField(int dim, Evaluator values, Growth growth);

  ConvexSet operator()(double t, const Vec& y) const;
  double growth(double t) const { return growth_(t); }
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
  Evaluator values_;
  Growth growth_;
};

/// Distance to F(t, y) tolerated by a selection's membership audit:
/// absolute + growth_scaled * alpha(t). Both zero requests exact membership
/// (up to rounding).
struct SelectionAuditSlack {
  double absolute = 0.0;
  double growth_scaled = 0.0;
};

/// Single-valued selection of a SetField, possibly piecewise in time.
///
/// The time axis is split by `breakpoints` into pieces; piece k covers
/// [b_{k-1}, b_k) and evaluation at a breakpoint uses the piece that starts
/// there. The integrator evaluates on a fixed piece so that stages landing on
/// the right end of a piece see the left limit.
class Selection {
 public:
  using PieceEvaluator = std::function<Vec(std::size_t piece, double t, const Vec& y)>;

  using AuditSlack = SelectionAuditSlack;

  Selection(std::string label, PieceEvaluator eval, std::vector<double> breakpoints = {},
            AuditSlack slack = {});

  Vec operator()(double t, const Vec& y) const;
  Vec on_piece(std::size_t piece, double t, const Vec& y) const { return eval_(piece, t, y); }
  std::size_t piece_at(double t) const;
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  const std::string& label() const noexcept { return label_; }
  const AuditSlack& audit_slack() const noexcept { return audit_slack_; }
  bool exact() const noexcept {
    return audit_slack_.absolute == 0.0 && audit_slack_.growth_scaled == 0.0;
  }

  /// Membership audit of `value` against F(t, y).
  bool audit(const SetField& field, double t, const Vec& y, const Vec& value) const;

 private:
  std::string label_;
  PieceEvaluator eval_;
  std::vector<double> breakpoints_;
  AuditSlack audit_slack_;
};

struct BoundingBox {
  Vec lower;
  Vec upper;

  bool contains(const Vec& y, double tol = 0.0) const;
  BoundingBox intersect(const BoundingBox& other) const;
  int dim() const { return static_cast<int>(lower.size()); }
};

/// Piecewise-constant direction schedule: directions[k] is active on piece k.
struct DirectionSchedule {
  std::vector<double> switch_times;
  std::vector<Vec> directions;

  /// `switches` switch times uniform in [0, horizon] and switches + 1 unit
  /// directions uniform on the sphere, all determined by `seed`.
  static DirectionSchedule random(int dim, double horizon, std::uint64_t seed, int switches);
};

Selection select_zero(const SetField& field);
Selection select_center(const SetField& field);
/// (t, y) -> extreme_point(F(t, y), d).
Selection select_extreme(const SetField& field, const Vec& direction);
/// Extreme-point selection following a direction schedule.
Selection select_schedule(const SetField& field, const DirectionSchedule& schedule,
                          std::string label);
/// Bang-bang selection with `switches` random switch times (seeded).
Selection select_random(const SetField& field, double horizon, std::uint64_t seed, int switches);

/// Partition-of-unity selection g_n(t, y) = sum_s lambda_s(y) q_s(t).
///
/// Anchors y_s sit on the uniform grid of spacing 1/n anchored at box.lower;
/// lambda_s are the multilinear tent functions of that grid and q_s(t) is the
/// center of F(t, y_s). Only the 2^N anchors of the cell containing y are
/// touched, so evaluation cost does not depend on the size of the box.
/// Evaluation outside the box throws ExtrapolationError. The audit accepts
/// values within alpha(t) sqrt(N)/n (+1e-9) of F(t, y).
Selection mollify(const SetField& field, int n, const BoundingBox& box);

/// Same construction with q_s(t) := anchor(t, y_s) on the matching piece.
Selection mollify(const SetField& field, int n, const BoundingBox& box, const Selection& anchor);

}  // namespace pulse
