#include "wce/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wce {

double factorial(int n) {
    if (n < 0 || n > 170) throw std::invalid_argument("factorial out of range");
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= static_cast<double>(k);
    return f;
}

SymIndexer::SymIndexer(Index cells, int order) : cells_(cells), order_(order) {
    if (cells < 1 || order < 1) throw std::invalid_argument("bad indexer dimensions");
    // binom_[k-1][c] = C(c, k), built for c up to cells + order.
    binom_.assign(static_cast<std::size_t>(order), {});
    const Index cmax = cells + order;
    for (int k = 1; k <= order; ++k) {
        auto& row = binom_[static_cast<std::size_t>(k - 1)];
        row.assign(static_cast<std::size_t>(cmax + 1), 0);
        for (Index c = 0; c <= cmax; ++c) {
            if (c < k) {
                row[static_cast<std::size_t>(c)] = 0;
            } else if (k == 1) {
                row[static_cast<std::size_t>(c)] = c;
            } else {
                row[static_cast<std::size_t>(c)] =
                    binom_[static_cast<std::size_t>(k - 2)][static_cast<std::size_t>(c - 1)] *
                        c / k;
            }
        }
    }
    // C(cells + order - 1, order) orbits in total.
    Index sz = 1;
    for (int k = 1; k <= order; ++k) sz = sz * (cells + order - k) / k;
    size_ = sz;
}

Index SymIndexer::rank(std::span<const Index> sorted) const {
    Index r = 0;
    for (int j = 0; j < order_; ++j) {
        const Index c = sorted[static_cast<std::size_t>(j)] + j;
        r += binom_[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
    }
    return r;
}

double SymIndexer::orbit_multiplicity(std::span<const Index> sorted) {
    const int n = static_cast<int>(sorted.size());
    double mult = factorial(n);
    int run = 1;
    for (int j = 1; j < n; ++j) {
        if (sorted[static_cast<std::size_t>(j)] == sorted[static_cast<std::size_t>(j - 1)]) {
            ++run;
        } else {
            mult /= factorial(run);
            run = 1;
        }
    }
    mult /= factorial(run);
    return mult;
}

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
}

// Ryser's formula with Gray-code updates, O(2^n n).
double permanent(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    if (n == 0) return 1.0;
    if (n > 16) throw std::invalid_argument("permanent limited to order <= 16");
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(n);
    double total = 0.0;
    std::uint32_t subset = 0;
    const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1u);
    int popcount = 0;
    for (std::uint32_t g = 1; g <= full; ++g) {
        const std::uint32_t gray = g ^ (g >> 1);
        const std::uint32_t changed = gray ^ subset;
        const int col = std::countr_zero(changed);
        if (gray & changed) {
            rowsum += a.col(col);
            ++popcount;
        } else {
            rowsum -= a.col(col);
            --popcount;
        }
        subset = gray;
        const double prod = rowsum.prod();
        total += ((n - popcount) % 2 == 0) ? prod : -prod;
    }
    return total;
}

bool factors_uniform(const std::vector<GridFn>& factors) {
    for (std::size_t a = 1; a < factors.size(); ++a)
        if (factors[a].values != factors[0].values) return false;
    return true;
}

} // namespace

Kernel Kernel::constant(double value) {
    require_finite(value, "kernel value");
    Kernel k;
    k.rep_ = Rep::Constant;
    k.order_ = 0;
    k.constant_ = value;
    return k;
}

Kernel Kernel::dense(GridPtr grid, int order, Eigen::VectorXd orbit_values) {
    if (order < 1 || order > dense_max_order)
        throw std::invalid_argument("dense kernels support orders 1..3");
    Kernel k;
    k.rep_ = Rep::Dense;
    k.order_ = order;
    k.grid_ = std::move(grid);
    k.indexer_ = std::make_shared<const SymIndexer>(k.grid_->cell_count(), order);
    if (k.indexer_->size() > dense_max_entries)
        throw std::invalid_argument("dense kernel exceeds the evaluation limit");
    if (orbit_values.size() != k.indexer_->size())
        throw std::invalid_argument("dense kernel payload has wrong size");
    for (Index i = 0; i < orbit_values.size(); ++i)
        require_finite(orbit_values[i], "kernel value");
    k.dense_values_ = std::move(orbit_values);
    return k;
}

Kernel Kernel::dense_zero(GridPtr grid, int order) {
    SymIndexer idx(grid->cell_count(), order);
    return dense(std::move(grid), order, Eigen::VectorXd::Zero(idx.size()));
}

Kernel Kernel::separable(GridPtr grid, int order, std::vector<SeparableTerm> terms) {
    if (order < 1) throw std::invalid_argument("separable kernels need order >= 1");
    Kernel k;
    k.rep_ = Rep::Separable;
    k.order_ = order;
    k.grid_ = std::move(grid);
    for (auto& t : terms) {
        require_finite(t.coeff, "kernel coefficient");
        if (static_cast<int>(t.factors.size()) != order)
            throw std::invalid_argument("separable term factor count does not match order");
        for (const GridFn& g : t.factors) {
            if (!g.grid->same_layout(*k.grid_))
                throw std::invalid_argument("separable factor lives on a different grid");
            for (Index i = 0; i < g.values.size(); ++i) require_finite(g.values[i], "kernel factor");
        }
        t.uniform = factors_uniform(t.factors);
    }
    k.terms_ = std::move(terms);
    return k;
}

Kernel Kernel::rank_one_power(const GridFn& factor, int order, double coeff) {
    if (order == 0) return constant(coeff);
    SeparableTerm term;
    term.coeff = coeff;
    term.factors.assign(static_cast<std::size_t>(order), factor);
    return separable(factor.grid, order, {std::move(term)});
}

const SymIndexer& Kernel::indexer() const {
    if (!indexer_) throw std::logic_error("kernel has no dense indexer");
    return *indexer_;
}

double Kernel::value_at(std::span<const Index> cells) const {
    if (static_cast<int>(cells.size()) != order_)
        throw std::invalid_argument("multi-index length does not match kernel order");
    switch (rep_) {
    case Rep::Constant:
        return constant_;
    case Rep::Dense: {
        std::vector<Index> sorted(cells.begin(), cells.end());
        std::sort(sorted.begin(), sorted.end());
        return dense_values_[indexer_->rank(sorted)];
    }
    case Rep::Separable: {
        double total = 0.0;
        for (const SeparableTerm& t : terms_) {
            if (t.uniform) {
                double prod = t.coeff;
                for (Index c : cells) prod *= t.factors[0].values[c];
                total += prod;
            } else {
                const int n = order_;
                if (n > 12)
                    throw std::invalid_argument(
                        "pointwise evaluation of mixed-factor terms limited to order <= 12");
                Eigen::MatrixXd b(n, n);
                for (int a = 0; a < n; ++a)
                    for (int i = 0; i < n; ++i)
                        b(a, i) = t.factors[static_cast<std::size_t>(a)]
                                      .values[cells[static_cast<std::size_t>(i)]];
                total += t.coeff * permanent(b) / factorial(n);
            }
        }
        return total;
    }
    }
    return 0.0;
}

bool Kernel::is_zero() const {
    switch (rep_) {
    case Rep::Constant:
        return constant_ == 0.0;
    case Rep::Dense:
        return dense_values_.isZero(0.0);
    case Rep::Separable:
        for (const SeparableTerm& t : terms_) {
            if (t.coeff == 0.0) continue;
            bool zero_factor = false;
            for (const GridFn& g : t.factors)
                if (g.values.isZero(0.0)) { zero_factor = true; break; }
            if (!zero_factor) return false;
        }
        return true;
    }
    return true;
}

Kernel Kernel::scaled(double c) const {
    Kernel k = *this;
    switch (rep_) {
    case Rep::Constant:
        k.constant_ *= c;
        break;
    case Rep::Dense:
        k.dense_values_ *= c;
        break;
    case Rep::Separable:
        for (auto& t : k.terms_) t.coeff *= c;
        break;
    }
    return k;
}

Kernel Kernel::append_factor(const GridFn& g) const {
    if (rep_ == Rep::Dense)
        throw std::invalid_argument("append_factor needs a separable or constant kernel");
    std::vector<SeparableTerm> terms;
    if (rep_ == Rep::Constant) {
        SeparableTerm t;
        t.coeff = constant_;
        t.factors.push_back(g);
        terms.push_back(std::move(t));
    } else {
        terms = terms_;
        for (auto& t : terms) t.factors.push_back(g);
    }
    return separable(g.grid, order_ + 1, std::move(terms));
}

Kernel Kernel::masked(const GridFn& mask) const {
    switch (rep_) {
    case Rep::Constant:
        return *this;
    case Rep::Dense: {
        Eigen::VectorXd values = dense_values_;
        Index r = 0;
        for_each_orbit(grid_->cell_count(), order_, [&](std::span<const Index> idx) {
            double m = 1.0;
            for (Index c : idx) m *= mask.values[c];
            values[r++] *= m;
        });
        return dense(grid_, order_, std::move(values));
    }
    case Rep::Separable: {
        std::vector<SeparableTerm> terms = terms_;
        for (auto& t : terms)
            for (auto& f : t.factors) f.values = f.values.cwiseProduct(mask.values);
        return separable(grid_, order_, std::move(terms));
    }
    }
    return *this;
}

Kernel Kernel::to_dense() const {
    if (rep_ == Rep::Dense) return *this;
    if (rep_ == Rep::Constant)
        throw std::invalid_argument("order-0 kernels have no dense form");
    if (order_ > dense_max_order)
        throw std::invalid_argument("kernel order exceeds the dense limit");
    SymIndexer idx(grid_->cell_count(), order_);
    if (idx.size() > dense_max_entries)
        throw std::invalid_argument("dense conversion exceeds the evaluation limit");
    Eigen::VectorXd values(idx.size());
    Index r = 0;
    for_each_orbit(grid_->cell_count(), order_, [&](std::span<const Index> t) {
        values[r++] = value_at(t);
    });
    return dense(grid_, order_, std::move(values));
}

namespace {

void require_compatible(const Kernel& a, const Kernel& b) {
    if (a.order() != b.order()) throw std::invalid_argument("kernel orders differ");
    if (a.order() > 0 && !a.grid()->same_layout(*b.grid()))
        throw std::invalid_argument("kernels live on different grids");
}

bool can_densify(const Kernel& k) {
    if (k.rep() == Kernel::Rep::Dense) return true;
    if (k.rep() == Kernel::Rep::Constant) return false;
    if (k.order() > Kernel::dense_max_order) return false;
    SymIndexer idx(k.grid()->cell_count(), k.order());
    return idx.size() <= Kernel::dense_max_entries;
}

double inner_dense_dense(const Kernel& a, const Kernel& b) {
    const Eigen::VectorXd& m = a.grid()->cell_measure();
    double total = 0.0;
    Index r = 0;
    for_each_orbit(a.grid()->cell_count(), a.order(), [&](std::span<const Index> t) {
        double meas = 1.0;
        for (Index c : t) meas *= m[c];
        total += SymIndexer::orbit_multiplicity(t) * a.orbit_values()[r] *
                 b.orbit_values()[r] * meas;
        ++r;
    });
    return total;
}

double inner_terms(const Kernel::SeparableTerm& s, const Kernel::SeparableTerm& t, int n) {
    auto dot = [&](const GridFn& x, const GridFn& y) { return l2_inner(x, y); };
    if (s.uniform && t.uniform) {
        return s.coeff * t.coeff * std::pow(dot(s.factors[0], t.factors[0]), n);
    }
    if (s.uniform || t.uniform) {
        const auto& u = s.uniform ? s : t;
        const auto& v = s.uniform ? t : s;
        double prod = 1.0;
        for (int b = 0; b < n; ++b) prod *= dot(u.factors[0], v.factors[static_cast<std::size_t>(b)]);
        return s.coeff * t.coeff * prod;
    }
    Eigen::MatrixXd gram(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            gram(a, b) = dot(s.factors[static_cast<std::size_t>(a)],
                             t.factors[static_cast<std::size_t>(b)]);
    return s.coeff * t.coeff * permanent(gram) / factorial(n);
}

} // namespace

double kernel_inner(const Kernel& a, const Kernel& b) {
    require_compatible(a, b);
    if (a.order() == 0) return a.constant_value() * b.constant_value();
    using Rep = Kernel::Rep;
    if (a.rep() == Rep::Dense && b.rep() == Rep::Dense) return inner_dense_dense(a, b);
    if (a.rep() == Rep::Separable && b.rep() == Rep::Separable) {
        double total = 0.0;
        for (const auto& s : a.terms())
            for (const auto& t : b.terms())
                total += inner_terms(s, t, a.order());
        return total;
    }
    // Mixed representations go through the dense form.
    const Kernel da = a.rep() == Rep::Dense ? a : a.to_dense();
    const Kernel db = b.rep() == Rep::Dense ? b : b.to_dense();
    return inner_dense_dense(da, db);
}

double kernel_norm(const Kernel& k) {
    if (k.order() == 0) return std::abs(k.constant_value());
    return std::sqrt(std::max(0.0, kernel_inner(k, k)));
}

double kernel_lp_norm(const Kernel& k, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
    if (k.order() == 0) return std::abs(k.constant_value());
    if (k.rep() == Kernel::Rep::Separable && k.terms().size() == 1 && k.terms()[0].uniform) {
        const auto& t = k.terms()[0];
        return std::abs(t.coeff) * std::pow(lp_norm(t.factors[0], p), k.order());
    }
    const Kernel d = k.to_dense();
    const Eigen::VectorXd& m = d.grid()->cell_measure();
    double total = 0.0;
    Index r = 0;
    for_each_orbit(d.grid()->cell_count(), d.order(), [&](std::span<const Index> t) {
        double meas = 1.0;
        for (Index c : t) meas *= m[c];
        total += SymIndexer::orbit_multiplicity(t) *
                 std::pow(std::abs(d.orbit_values()[r]), p) * meas;
        ++r;
    });
    return std::pow(total, 1.0 / p);
}

double kernel_diff_norm(const Kernel& a, const Kernel& b) {
    require_compatible(a, b);
    if (a.order() == 0) return std::abs(a.constant_value() - b.constant_value());
    if (can_densify(a) && can_densify(b)) {
        const Kernel da = a.to_dense();
        const Kernel db = b.to_dense();
        const Kernel diff = Kernel::dense(da.grid(), da.order(),
                                          da.orbit_values() - db.orbit_values());
        return kernel_norm(diff);
    }
    const double sq = kernel_inner(a, a) - 2.0 * kernel_inner(a, b) + kernel_inner(b, b);
    return std::sqrt(std::max(0.0, sq));
}

double kernel_diff_lp_norm(const Kernel& a, const Kernel& b, double p) {
    require_compatible(a, b);
    if (a.order() == 0) return std::abs(a.constant_value() - b.constant_value());
    const Kernel da = a.to_dense();
    const Kernel db = b.to_dense();
    return kernel_lp_norm(
        Kernel::dense(da.grid(), da.order(), da.orbit_values() - db.orbit_values()), p);
}

Kernel symmetrize(const GridPtr& grid, const std::vector<Kernel>& site_map) {
    if (static_cast<Index>(site_map.size()) != grid->cell_count())
        throw std::invalid_argument("site map needs one kernel per grid cell");
    const int n = site_map.front().order();
    for (const Kernel& k : site_map) {
        if (k.order() != n) throw std::invalid_argument("site map orders differ");
        if (n > 0 && !k.grid()->same_layout(*grid))
            throw std::invalid_argument("site map kernel lives on a different grid");
    }
    const int out_order = n + 1;
    if (out_order > Kernel::dense_max_order)
        throw std::invalid_argument("symmetrize output order exceeds the dense limit");

    SymIndexer idx(grid->cell_count(), out_order);
    Eigen::VectorXd values(idx.size());
    std::vector<Index> rest(static_cast<std::size_t>(n));
    Index r = 0;
    for_each_orbit(grid->cell_count(), out_order, [&](std::span<const Index> t) {
        double acc = 0.0;
        for (int s = 0; s < out_order; ++s) {
            for (int j = 0, w = 0; j < out_order; ++j)
                if (j != s) rest[static_cast<std::size_t>(w++)] = t[static_cast<std::size_t>(j)];
            const Kernel& site = site_map[static_cast<std::size_t>(t[static_cast<std::size_t>(s)])];
            acc += (n == 0) ? site.constant_value() : site.value_at(rest);
        }
        values[r++] = acc / static_cast<double>(out_order);
    });
    return Kernel::dense(grid, out_order, std::move(values));
}

Kernel dense_from_rows(GridPtr grid, int order,
                       const std::vector<std::pair<std::vector<Index>, double>>& rows) {
    SymIndexer idx(grid->cell_count(), order);
    Eigen::VectorXd values = Eigen::VectorXd::Zero(idx.size());
    for (const auto& [raw, v] : rows) {
        if (static_cast<int>(raw.size()) != order)
            throw std::invalid_argument("row multi-index length does not match order");
        std::vector<Index> sorted = raw;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() < 0 || sorted.back() >= grid->cell_count())
            throw std::invalid_argument("row multi-index out of range");
        values[idx.rank(sorted)] = v;
    }
    return Kernel::dense(std::move(grid), order, std::move(values));
}

Kernel load_dense_csv(const GridPtr& grid, int order, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open kernel table: " + path);
    std::vector<std::pair<std::vector<Index>, double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::vector<Index> idx(static_cast<std::size_t>(order));
        std::string tok;
        for (int j = 0; j < order; ++j) {
            if (!std::getline(ss, tok, ',')) throw std::invalid_argument("short kernel row");
            idx[static_cast<std::size_t>(j)] = std::stoll(tok);
        }
        if (!std::getline(ss, tok, ',')) throw std::invalid_argument("kernel row missing value");
        rows.emplace_back(std::move(idx), std::stod(tok));
    }
    return dense_from_rows(grid, order, rows);
}

KernelFamily::KernelFamily(SiteSet sites, std::vector<std::vector<Kernel>> per_site)
    : sites_(std::move(sites)), per_site_(std::move(per_site)) {
    if (per_site_.size() != static_cast<std::size_t>(sites_.count()))
        throw std::invalid_argument("family needs one kernel list per site");
    max_order_ = static_cast<int>(per_site_.front().size()) - 1;
    if (max_order_ < 0) throw std::invalid_argument("family has no kernels");
    for (const auto& list : per_site_) {
        if (static_cast<int>(list.size()) != max_order_ + 1)
            throw std::invalid_argument("family orders must be contiguous from 0 at every site");
        for (int n = 0; n <= max_order_; ++n) {
            if (list[static_cast<std::size_t>(n)].order() != n)
                throw std::invalid_argument("family kernel order mismatch");
            const GridPtr& g = list[static_cast<std::size_t>(n)].grid();
            if (n >= 1) {
                if (!grid_) grid_ = g;
                else if (!grid_->same_layout(*g))
                    throw std::invalid_argument("family kernels live on different grids");
            }
        }
    }
}

double ModulusSpec::omega(double s) const { return c * std::pow(s, gamma); }

void ModulusSpec::validate() const {
    if (!(c > 0.0)) throw std::invalid_argument("modulus constant must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("modulus exponent must lie in (0,1)");
    if (!(alpha0 > 0.0 && alpha0 < gamma))
        throw std::invalid_argument("alpha0 must lie in (0, gamma)");
}

ExpTypeReport check_exponential_type(const KernelFamily& family) {
    ExpTypeReport rep;
    rep.delta_fit = 0.0;
    bool finite = true;
    for (Index z = 0; z < family.site_count(); ++z) {
        for (int n = 1; n <= family.max_order(); ++n) {
            const double norm = kernel_norm(family.at(z, n));
            if (!std::isfinite(norm)) { finite = false; continue; }
            if (norm == 0.0) continue;
            rep.delta_fit = std::max(rep.delta_fit,
                                     std::pow(factorial(n) * norm, 1.0 / static_cast<double>(n)));
        }
    }
    rep.pass = finite && std::isfinite(rep.delta_fit);
    return rep;
}

double series_tail_bound(double delta, double kappa, int n_max) {
    const double kd = kappa * delta;
    if (kd == 0.0) return 0.0;
    if (kd < 0.0) throw std::invalid_argument("tail bound needs kappa, delta >= 0");
    const double ratio = kd / std::sqrt(static_cast<double>(n_max + 2));
    if (ratio >= 1.0)
        throw std::invalid_argument("no contracting tail bound at this kappa");
    const double log_head = (n_max + 1) * std::log(kd) - 0.5 * std::lgamma(n_max + 2.0);
    return std::exp(log_head) / (1.0 - ratio);
}

double series_bound(const KernelFamily& family, double kappa) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
    const ExpTypeReport fit = check_exponential_type(family);
    const int n_max = family.max_order();
    double tail = std::numeric_limits<double>::infinity();
    const double ratio = kappa * fit.delta_fit / std::sqrt(static_cast<double>(n_max + 2));
    if (fit.pass && ratio < 1.0) tail = series_tail_bound(fit.delta_fit, kappa, n_max);

    double worst = 0.0;
    for (Index z = 0; z < family.site_count(); ++z) {
        double sum = 0.0;
        for (int n = 0; n <= n_max; ++n) {
            const double norm = kernel_norm(family.at(z, n));
            sum += std::sqrt(factorial(n)) * std::pow(kappa, n) * norm;
        }
        worst = std::max(worst, sum);
    }
    return worst + tail;
}

ModulusProfile modulus_profile(const KernelFamily& family, double kappa,
                               const ModulusSpec& spec, double moment_order) {
    spec.validate();
    if (family.site_count() < 2)
        throw std::invalid_argument("modulus profile needs at least two sites");
    if (moment_order != 0.0 && !(moment_order > 2.0))
        throw std::invalid_argument("moment order must exceed 2");
    const double p = moment_order == 0.0 ? 2.0 : 2.0 * moment_order / (moment_order - 2.0);

    ModulusProfile out;
    out.worst_margin = std::numeric_limits<double>::infinity();
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    Index used = 0;
    for (Index a = 0; a < family.site_count(); ++a) {
        for (Index b = a + 1; b < family.site_count(); ++b) {
            ModulusRow row;
            row.site_a = a;
            row.site_b = b;
            row.distance = family.sites().distance(a, b);
            double lhs = 0.0;
            for (int n = 0; n <= family.max_order(); ++n) {
                const double d = (p == 2.0)
                                     ? kernel_diff_norm(family.at(a, n), family.at(b, n))
                                     : kernel_diff_lp_norm(family.at(a, n), family.at(b, n), p);
                lhs += std::sqrt(factorial(n)) * std::pow(kappa, n) * d;
            }
            row.lhs = lhs;
            row.omega = spec.omega(row.distance);
            row.margin = row.omega - row.lhs;
            out.worst_margin = std::min(out.worst_margin, row.margin);
            if (row.lhs > 0.0 && row.distance > 0.0) {
                const double x = std::log(row.distance);
                const double y = std::log(row.lhs);
                sx += x; sy += y; sxx += x * x; sxy += x * y;
                ++used;
            }
            out.rows.push_back(row);
        }
    }
    const double denom = used > 1 ? (sxx - sx * sx / static_cast<double>(used)) : 0.0;
    out.fitted_exponent = denom > 0.0
                              ? (sxy - sx * sy / static_cast<double>(used)) / denom
                              : std::numeric_limits<double>::quiet_NaN();
    out.pass = out.worst_margin >= -1e-12;
    return out;
}

} // namespace wce
