#include "crn/pgm/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::pgm {

std::size_t DbnModel::transition_configs(std::size_t v) const {
    std::size_t q = 1;
    for (const auto& p : transition_parents[v]) q *= static_cast<std::size_t>(variables[p.var].cardinality);
    return q;
}

double DbnModel::transition_prob(std::size_t v, std::span<const int> prev, std::span<const int> cur) const {
    std::size_t j = 0;
    for (const auto& p : transition_parents[v]) {
        const int state = p.lag == 0 ? cur[p.var] : prev[p.var];
        j = j * static_cast<std::size_t>(variables[p.var].cardinality) + static_cast<std::size_t>(state);
    }
    const auto r = static_cast<std::size_t>(variables[v].cardinality);
    return transition_cpts[v][j * r + static_cast<std::size_t>(cur[v])];
}

void DbnModel::validate(double tol) const {
    const auto n = size();
    if (direction >= n || variables[direction].cardinality != 2) {
        throw ContractError("DBN direction variable must be binary");
    }
    if (prior.variables() != variables) throw ContractError("DBN prior slice variables differ");
    prior.validate(tol);
    if (transition_parents.size() != n || transition_cpts.size() != n) {
        throw ShapeError("DBN transition tables do not cover every variable");
    }
    if (window < 1) throw ContractError("DBN window must be at least one slice");
    BayesNet intra(variables);
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::size_t> same_slice;
        for (const auto& p : transition_parents[v]) {
            if (p.var >= n || (p.lag != 0 && p.lag != 1) || (p.lag == 0 && p.var == v)) {
                throw ContractError(fmt::format("bad transition parent for '{}'", variables[v].name));
            }
            if (p.lag == 0) same_slice.push_back(p.var);
        }
        intra.set_parents(v, same_slice);
        const auto r = static_cast<std::size_t>(variables[v].cardinality);
        const auto q = transition_configs(v);
        if (transition_cpts[v].size() != q * r) {
            throw ShapeError(fmt::format("transition CPT for '{}' has wrong shape", variables[v].name));
        }
        for (std::size_t j = 0; j < q; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < r; ++k) sum += transition_cpts[v][j * r + k];
            if (std::abs(sum - 1.0) > tol) {
                throw ContractError(fmt::format("transition CPT row of '{}' sums to {}", variables[v].name, sum));
            }
        }
    }
    if (!intra.acyclic()) throw ContractError("DBN intra-slice transition structure has a cycle");
}

std::size_t DbnModel::edge_count() const {
    std::size_t n = 0;
    for (const auto& ps : transition_parents) n += ps.size();
    return n;
}

BayesNet DbnModel::unroll(std::size_t slices) const {
    const auto n = size();
    std::vector<DiscreteVariable> vars;
    for (std::size_t s = 0; s < slices; ++s) {
        for (const auto& v : variables) {
            auto copy = v;
            copy.name = fmt::format("{}@{}", v.name, s);
            vars.push_back(std::move(copy));
        }
    }
    BayesNet net(std::move(vars));
    for (std::size_t s = 0; s < slices; ++s) {
        for (std::size_t v = 0; v < n; ++v) {
            std::vector<std::size_t> ps;
            if (s == 0) {
                for (auto p : prior.parents(v)) ps.push_back(p);
                net.set_parents(v, ps);
                net.set_cpt(v, prior.cpt(v));
            } else {
                for (const auto& p : transition_parents[v]) {
                    ps.push_back(p.lag == 0 ? s * n + p.var : (s - 1) * n + p.var);
                }
                net.set_parents(s * n + v, ps);
                net.set_cpt(s * n + v, transition_cpts[v]);
            }
        }
    }
    return net;
}

namespace {

void normalize(std::vector<double>& b) {
    const double z = b[0] + b[1];
    if (!(z > 0.0)) throw ZeroProbabilityError("window has zero probability under the DBN");
    b[0] /= z;
    b[1] /= z;
}

}  // namespace

DirectionPrediction dbn_predict(const DbnModel& model, std::span<const DbnSlice> window) {
    if (window.size() != model.window) {
        throw ContractError(fmt::format("DBN window needs {} slices, got {}", model.window, window.size()));
    }
    const auto n = model.size();
    const auto d = model.direction;
    for (const auto& slice : window) {
        if (slice.size() != n) throw ShapeError("DBN slice has the wrong number of variables");
        for (std::size_t v = 0; v < n; ++v) {
            if (v == d && slice[v] == kUnobserved) continue;
            if (slice[v] < 0 || slice[v] >= model.variables[v].cardinality) {
                throw ContractError(fmt::format("slice value {} invalid for '{}'", slice[v], model.variables[v].name));
            }
        }
    }

    std::vector<double> belief(2, 0.0);
    std::vector<int> cur = window[0];
    for (int dir = 0; dir < 2; ++dir) {
        if (window[0][d] != kUnobserved && window[0][d] != dir) continue;
        cur[d] = dir;
        double p = 1.0;
        for (std::size_t v = 0; v < n; ++v) p *= model.prior.prob(v, cur);
        belief[static_cast<std::size_t>(dir)] = p;
    }
    normalize(belief);

    for (std::size_t s = 1; s < window.size(); ++s) {
        std::vector<int> prev = window[s - 1];
        cur = window[s];
        std::vector<double> next(2, 0.0);
        for (int dir = 0; dir < 2; ++dir) {
            if (window[s][d] != kUnobserved && window[s][d] != dir) continue;
            cur[d] = dir;
            double acc = 0.0;
            for (int pd = 0; pd < 2; ++pd) {
                const double w = belief[static_cast<std::size_t>(pd)];
                if (w == 0.0) continue;
                prev[d] = pd;
                double p = 1.0;
                for (std::size_t v = 0; v < n; ++v) p *= model.transition_prob(v, prev, cur);
                acc += w * p;
            }
            next[static_cast<std::size_t>(dir)] = acc;
        }
        normalize(next);
        belief = std::move(next);
    }
    return {belief[kUp], belief[kDown]};
}

DbnModel fit_dbn(const DiscreteFrame& rows, const DbnOptions& opts) {
    const auto n_rows = rows.rows();
    if (n_rows < opts.min_rows) {
        throw InsufficientDataError(
            fmt::format("DBN fitting needs at least {} rows, got {}", opts.min_rows, n_rows));
    }
    const auto n = rows.cols();
    const auto dir = rows.index_of(kDirection);

    DbnModel model;
    model.variables = rows.variables;
    model.direction = dir;
    model.window = opts.window;
    BayesNet intra = learn_structure(rows, kDirection, opts.structure);
    model.prior = fit_cpts(intra, rows);

    // Consecutive pairs: columns [0, n) are slice t, [n, 2n) are slice t-1.
    DiscreteFrame pairs;
    for (const auto& v : rows.variables) pairs.variables.push_back(v);
    for (const auto& v : rows.variables) {
        auto lagged = v;
        lagged.name = v.name + "@prev";
        pairs.variables.push_back(std::move(lagged));
    }
    for (std::size_t c = 0; c < n; ++c) pairs.data.emplace_back(rows.data[c].begin() + 1, rows.data[c].end());
    for (std::size_t c = 0; c < n; ++c) pairs.data.emplace_back(rows.data[c].begin(), rows.data[c].end() - 1);

    model.transition_parents.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (auto p : intra.parents(v)) model.transition_parents[v].push_back({p, 0});
        model.transition_parents[v].push_back({v, 1});
    }

    // Lagged features feeding the direction, chosen greedily by BIC. Features
    // already adjacent to the direction inside the slice are not candidates.
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < n; ++f) {
        if (f == dir || intra.has_edge(f, dir) || intra.has_edge(dir, f)) continue;
        candidates.push_back(f);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](auto a, auto b) { return rows.variables[a].name < rows.variables[b].name; });
    auto pair_cols = [&](const std::vector<LaggedParent>& ps) {
        std::vector<std::size_t> cols;
        for (const auto& p : ps) cols.push_back(p.lag == 0 ? p.var : n + p.var);
        return cols;
    };
    auto& dparents = model.transition_parents[dir];
    double current = bic_local_score(pairs, dir, pair_cols(dparents));
    const auto cap = static_cast<std::size_t>(std::max(opts.max_direction_parents, 0));
    while (dparents.size() < cap) {
        double best = current + opts.structure.min_improvement;
        std::optional<std::size_t> pick;
        for (auto f : candidates) {
            auto trial = dparents;
            trial.push_back({f, 1});
            const double s = bic_local_score(pairs, dir, pair_cols(trial));
            if (s > best) {
                best = s;
                pick = f;
            }
        }
        if (!pick) break;
        dparents.push_back({*pick, 1});
        current = best;
        candidates.erase(std::find(candidates.begin(), candidates.end(), *pick));
    }

    BayesNet pair_net(pairs.variables);
    for (std::size_t v = 0; v < n; ++v) pair_net.set_parents(v, pair_cols(model.transition_parents[v]));
    pair_net = fit_cpts(pair_net, pairs);
    model.transition_cpts.resize(n);
    for (std::size_t v = 0; v < n; ++v) model.transition_cpts[v] = pair_net.cpt(v);
    return model;
}

nlohmann::json to_json(const DbnModel& model) {
    nlohmann::json trans = nlohmann::json::array();
    for (std::size_t v = 0; v < model.size(); ++v) {
        nlohmann::json ps = nlohmann::json::array();
        for (const auto& p : model.transition_parents[v]) ps.push_back({{"var", p.var}, {"lag", p.lag}});
        trans.push_back({{"name", model.variables[v].name}, {"parents", ps}, {"cpt", model.transition_cpts[v]}});
    }
    return {{"direction", model.direction},
            {"window", model.window},
            {"prior", to_json(model.prior)},
            {"transition", trans}};
}

DbnModel dbn_from_json(const nlohmann::json& j) {
    DbnModel m;
    m.prior = bayes_net_from_json(j.at("prior"));
    m.variables = m.prior.variables();
    m.direction = j.at("direction").get<std::size_t>();
    m.window = j.at("window").get<std::size_t>();
    for (const auto& t : j.at("transition")) {
        std::vector<LaggedParent> ps;
        for (const auto& p : t.at("parents")) ps.push_back({p.at("var").get<std::size_t>(), p.at("lag").get<int>()});
        m.transition_parents.push_back(std::move(ps));
        m.transition_cpts.push_back(t.at("cpt").get<std::vector<double>>());
    }
    m.validate();
    return m;
}

}  // namespace crn::pgm
