#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace wce {

using Index = Eigen::Index;

// One axis of the parameter box: `cells` equal cells on [lo, hi].
struct AxisSpec {
    Index cells = 1;
    double lo = 0.0;
    double hi = 1.0;
    double width() const { return (hi - lo) / static_cast<double>(cells); }
};

// Discretization of the parameter space: a time axis times up to two space
// axes, with a strictly positive measure per cell (product of cell widths,
// optionally reweighted). Immutable after construction; share freely.
class Grid {
public:
    Grid(std::vector<AxisSpec> axes, Eigen::VectorXd cell_measure);

    Index cell_count() const { return cell_measure_.size(); }
    int axis_count() const { return static_cast<int>(axes_.size()); }
    const AxisSpec& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
    const Eigen::VectorXd& cell_measure() const { return cell_measure_; }
    double total_measure() const { return cell_measure_.sum(); }

    // Flat cell index decomposition; axis 0 varies fastest.
    Index axis_index(int a, Index cell) const;
    double cell_center(int a, Index cell) const;
    double cell_lo(int a, Index cell) const;
    double cell_hi(int a, Index cell) const;

    // Fraction of the cell's axis-a extent lying in [axis lo, upto].
    double axis_coverage(int a, Index cell, double upto) const;

    bool same_layout(const Grid& other) const;

private:
    std::vector<AxisSpec> axes_;
    std::vector<Index> strides_;
    Eigen::VectorXd cell_measure_;
};

using GridPtr = std::shared_ptr<const Grid>;

struct GridSpec {
    Index time_cells = 1;
    double t_max = 1.0;
    std::vector<AxisSpec> space;        // 0..2 axes
    Eigen::VectorXd weights;            // optional per-cell measure multiplier
};

GridPtr build_grid(const GridSpec& spec);
GridPtr build_grid(Index time_cells, double t_max = 1.0);

// A real-valued function on the grid, one value per cell.
struct GridFn {
    GridPtr grid;
    Eigen::VectorXd values;
};

GridFn constant_fn(const GridPtr& grid, double value);
// Indicator of {axis-a coordinate <= upto}; partial cells get their covered fraction.
GridFn indicator_upto(const GridPtr& grid, double upto, int axis = 0);
// Product of indicator_upto over the first `dim` axes.
GridFn box_indicator(const GridPtr& grid, const Eigen::VectorXd& upper);
GridFn grid_fn(const GridPtr& grid, Eigen::VectorXd values);

double l2_inner(const GridFn& a, const GridFn& b);
double l2_norm(const GridFn& a);
double lp_norm(const GridFn& a, double p);

// Finite set of distinct evaluation sites in K = [0,1]^d, d in {1,2}.
class SiteSet {
public:
    SiteSet(int dim, Eigen::MatrixXd points);

    static SiteSet line(const std::vector<double>& coords);

    int dim() const { return dim_; }
    Index count() const { return points_.rows(); }
    double coord(Index site, int axis) const { return points_(site, axis); }
    double distance(Index a, Index b) const {
        return (points_.row(a) - points_.row(b)).norm();
    }
    const Eigen::MatrixXd& points() const { return points_; }

private:
    int dim_;
    Eigen::MatrixXd points_;
};

} // namespace wce
