#include "wce/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace wce {

Grid::Grid(std::vector<AxisSpec> axes, Eigen::VectorXd cell_measure)
    : axes_(std::move(axes)), cell_measure_(std::move(cell_measure)) {
    if (axes_.empty()) throw std::invalid_argument("grid needs at least the time axis");
    Index total = 1;
    strides_.resize(axes_.size());
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        if (axes_[a].cells < 1) throw std::invalid_argument("axis cell count must be >= 1");
        if (!(axes_[a].hi > axes_[a].lo)) throw std::invalid_argument("axis extent must be positive");
        strides_[a] = total;
        total *= axes_[a].cells;
    }
    if (cell_measure_.size() != total)
        throw std::invalid_argument("cell measure size does not match cell count");
    for (Index i = 0; i < total; ++i) {
        if (!(cell_measure_[i] > 0.0) || !std::isfinite(cell_measure_[i]))
            throw std::invalid_argument("every cell measure must be strictly positive");
    }
}

Index Grid::axis_index(int a, Index cell) const {
    return (cell / strides_[static_cast<std::size_t>(a)]) % axes_[static_cast<std::size_t>(a)].cells;
}

double Grid::cell_lo(int a, Index cell) const {
    const AxisSpec& ax = axes_[static_cast<std::size_t>(a)];
    return ax.lo + static_cast<double>(axis_index(a, cell)) * ax.width();
}

double Grid::cell_hi(int a, Index cell) const {
    const AxisSpec& ax = axes_[static_cast<std::size_t>(a)];
    return ax.lo + static_cast<double>(axis_index(a, cell) + 1) * ax.width();
}

double Grid::cell_center(int a, Index cell) const {
    return 0.5 * (cell_lo(a, cell) + cell_hi(a, cell));
}

double Grid::axis_coverage(int a, Index cell, double upto) const {
    const double lo = cell_lo(a, cell);
    const double hi = cell_hi(a, cell);
    if (upto <= lo) return 0.0;
    if (upto >= hi) return 1.0;
    return (upto - lo) / (hi - lo);
}

bool Grid::same_layout(const Grid& other) const {
    if (this == &other) return true;
    if (axes_.size() != other.axes_.size()) return false;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        if (axes_[a].cells != other.axes_[a].cells || axes_[a].lo != other.axes_[a].lo ||
            axes_[a].hi != other.axes_[a].hi)
            return false;
    }
    return cell_measure_ == other.cell_measure_;
}

GridPtr build_grid(const GridSpec& spec) {
    if (spec.time_cells < 1) throw std::invalid_argument("time_cells must be >= 1");
    if (!(spec.t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (spec.space.size() > 2) throw std::invalid_argument("at most two space axes are supported");

    std::vector<AxisSpec> axes;
    axes.push_back(AxisSpec{spec.time_cells, 0.0, spec.t_max});
    for (const AxisSpec& s : spec.space) axes.push_back(s);

    Index total = 1;
    for (const AxisSpec& ax : axes) total *= ax.cells;

    double base = 1.0;
    for (const AxisSpec& ax : axes) base *= ax.width();
    Eigen::VectorXd measure = Eigen::VectorXd::Constant(total, base);
    if (spec.weights.size() != 0) {
        if (spec.weights.size() != total)
            throw std::invalid_argument("weights size does not match cell count");
        for (Index i = 0; i < total; ++i) {
            if (!(spec.weights[i] > 0.0))
                throw std::invalid_argument("measure weights must be strictly positive");
        }
        measure.array() *= spec.weights.array();
    }
    return std::make_shared<const Grid>(std::move(axes), std::move(measure));
}

GridPtr build_grid(Index time_cells, double t_max) {
    GridSpec spec;
    spec.time_cells = time_cells;
    spec.t_max = t_max;
    return build_grid(spec);
}

GridFn constant_fn(const GridPtr& grid, double value) {
    return GridFn{grid, Eigen::VectorXd::Constant(grid->cell_count(), value)};
}

GridFn indicator_upto(const GridPtr& grid, double upto, int axis) {
    Eigen::VectorXd v(grid->cell_count());
    for (Index i = 0; i < grid->cell_count(); ++i) v[i] = grid->axis_coverage(axis, i, upto);
    return GridFn{grid, std::move(v)};
}

GridFn box_indicator(const GridPtr& grid, const Eigen::VectorXd& upper) {
    if (upper.size() > grid->axis_count())
        throw std::invalid_argument("box has more axes than the grid");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(grid->cell_count());
    for (int a = 0; a < upper.size(); ++a)
        for (Index i = 0; i < grid->cell_count(); ++i)
            v[i] *= grid->axis_coverage(a, i, upper[a]);
    return GridFn{grid, std::move(v)};
}

GridFn grid_fn(const GridPtr& grid, Eigen::VectorXd values) {
    if (values.size() != grid->cell_count())
        throw std::invalid_argument("grid function has wrong value count");
    return GridFn{grid, std::move(values)};
}

namespace {
void check_same_grid(const GridFn& a, const GridFn& b) {
    if (!a.grid || !b.grid || !a.grid->same_layout(*b.grid))
        throw std::invalid_argument("grid functions live on different grids");
}
} // namespace

double l2_inner(const GridFn& a, const GridFn& b) {
    check_same_grid(a, b);
    return (a.values.array() * b.values.array() * a.grid->cell_measure().array()).sum();
}

double l2_norm(const GridFn& a) { return std::sqrt(l2_inner(a, a)); }

double lp_norm(const GridFn& a, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
    const double s =
        (a.values.array().abs().pow(p) * a.grid->cell_measure().array()).sum();
    return std::pow(s, 1.0 / p);
}

SiteSet::SiteSet(int dim, Eigen::MatrixXd points) : dim_(dim), points_(std::move(points)) {
    if (dim_ < 1 || dim_ > 2) throw std::invalid_argument("site dimension must be 1 or 2");
    if (points_.cols() != dim_) throw std::invalid_argument("site coordinate count mismatch");
    if (points_.rows() < 1) throw std::invalid_argument("site set is empty");
    for (Index i = 0; i < points_.rows(); ++i) {
        for (int a = 0; a < dim_; ++a) {
            const double c = points_(i, a);
            if (!(c >= 0.0 && c <= 1.0))
                throw std::invalid_argument("site coordinates must lie in [0,1]");
        }
        for (Index j = 0; j < i; ++j)
            if ((points_.row(i) - points_.row(j)).norm() == 0.0)
                throw std::invalid_argument("sites must be pairwise distinct");
    }
}

SiteSet SiteSet::line(const std::vector<double>& coords) {
    Eigen::MatrixXd pts(static_cast<Index>(coords.size()), 1);
    for (std::size_t i = 0; i < coords.size(); ++i) pts(static_cast<Index>(i), 0) = coords[i];
    return SiteSet(1, std::move(pts));
}

} // namespace wce
