#include "crn/pgm/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::pgm {

BayesNet::BayesNet(std::vector<DiscreteVariable> variables)
    : variables_(std::move(variables)), parents_(variables_.size()), cpts_(variables_.size()) {
    for (const auto& v : variables_) {
        if (v.cardinality < 1) throw ContractError(fmt::format("variable '{}' has no states", v.name));
    }
}

std::size_t BayesNet::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name == name) return i;
    }
    throw LookupError(fmt::format("unknown variable '{}'", name));
}

void BayesNet::set_parents(std::size_t v, std::vector<std::size_t> parents) {
    for (auto p : parents) {
        if (p >= size() || p == v) throw ContractError("invalid parent index");
    }
    parents_[v] = std::move(parents);
    cpts_[v].clear();
}

bool BayesNet::has_edge(std::size_t from, std::size_t to) const {
    const auto& ps = parents_[to];
    return std::find(ps.begin(), ps.end(), from) != ps.end();
}

std::size_t BayesNet::edge_count() const {
    std::size_t n = 0;
    for (const auto& ps : parents_) n += ps.size();
    return n;
}

std::size_t BayesNet::parent_configs(std::size_t v) const {
    std::size_t q = 1;
    for (auto p : parents_[v]) q *= static_cast<std::size_t>(cardinality(p));
    return q;
}

std::size_t BayesNet::config_index(std::size_t v, std::span<const int> assignment) const {
    std::size_t idx = 0;
    for (auto p : parents_[v]) {
        idx = idx * static_cast<std::size_t>(cardinality(p)) + static_cast<std::size_t>(assignment[p]);
    }
    return idx;
}

void BayesNet::set_cpt(std::size_t v, std::vector<double> table) {
    const auto expected = parent_configs(v) * static_cast<std::size_t>(cardinality(v));
    if (table.size() != expected) {
        throw ShapeError(fmt::format("CPT for '{}' has {} entries, expected {}", variables_[v].name,
                                     table.size(), expected));
    }
    cpts_[v] = std::move(table);
}

bool BayesNet::has_cpts() const {
    for (std::size_t v = 0; v < size(); ++v) {
        if (cpts_[v].size() != parent_configs(v) * static_cast<std::size_t>(cardinality(v))) return false;
    }
    return true;
}

double BayesNet::prob(std::size_t v, std::span<const int> assignment) const {
    const auto r = static_cast<std::size_t>(cardinality(v));
    return cpts_[v][config_index(v, assignment) * r + static_cast<std::size_t>(assignment[v])];
}

std::vector<std::size_t> BayesNet::topological_order() const {
    const auto n = size();
    std::vector<std::size_t> pending(n);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t v = 0; v < n; ++v) {
        pending[v] = parents_[v].size();
        for (auto p : parents_[v]) children[p].push_back(v);
    }
    std::vector<std::size_t> order;
    std::vector<bool> done(n, false);
    while (order.size() < n) {
        bool progressed = false;
        for (std::size_t v = 0; v < n; ++v) {
            if (done[v] || pending[v] != 0) continue;
            done[v] = true;
            order.push_back(v);
            for (auto c : children[v]) --pending[c];
            progressed = true;
            break;
        }
        if (!progressed) throw ContractError("network contains a cycle");
    }
    return order;
}

bool BayesNet::acyclic() const {
    try {
        topological_order();
        return true;
    } catch (const ContractError&) {
        return false;
    }
}

void BayesNet::validate(double tol) const {
    topological_order();
    for (std::size_t v = 0; v < size(); ++v) {
        const auto r = static_cast<std::size_t>(cardinality(v));
        const auto q = parent_configs(v);
        if (cpts_[v].size() != q * r) {
            throw ShapeError(fmt::format("CPT for '{}' has wrong shape", variables_[v].name));
        }
        for (std::size_t j = 0; j < q; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < r; ++k) {
                const double p = cpts_[v][j * r + k];
                if (!(p >= 0.0 && p <= 1.0)) {
                    throw ContractError(fmt::format("CPT entry out of range for '{}'", variables_[v].name));
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > tol) {
                throw ContractError(fmt::format("CPT row {} of '{}' sums to {}", j, variables_[v].name, sum));
            }
        }
    }
}

double BayesNet::log_prob(std::span<const int> assignment) const {
    double lp = 0.0;
    for (std::size_t v = 0; v < size(); ++v) lp += std::log(prob(v, assignment));
    return lp;
}

namespace {

void check_codes(const DiscreteFrame& data) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
        const int card = data.variables[c].cardinality;
        for (int x : data.data[c]) {
            if (x < 0 || x >= card) {
                throw ContractError(fmt::format("variable '{}' has missing or out-of-range value {}",
                                                data.variables[c].name, x));
            }
        }
    }
}

// counts[j * r + k] for parent configuration j, state k.
std::vector<double> family_counts(const DiscreteFrame& data, std::size_t node,
                                  std::span<const std::size_t> parents) {
    const auto r = static_cast<std::size_t>(data.variables[node].cardinality);
    std::size_t q = 1;
    for (auto p : parents) q *= static_cast<std::size_t>(data.variables[p].cardinality);
    std::vector<double> counts(q * r, 0.0);
    const auto& x = data.data[node];
    for (std::size_t row = 0; row < data.rows(); ++row) {
        std::size_t j = 0;
        for (auto p : parents) {
            j = j * static_cast<std::size_t>(data.variables[p].cardinality) +
                static_cast<std::size_t>(data.data[p][row]);
        }
        counts[j * r + static_cast<std::size_t>(x[row])] += 1.0;
    }
    return counts;
}

}  // namespace

double bic_local_score(const DiscreteFrame& data, std::size_t node, std::span<const std::size_t> parents) {
    const auto r = static_cast<std::size_t>(data.variables[node].cardinality);
    const auto counts = family_counts(data, node, parents);
    const std::size_t q = counts.size() / r;
    double ll = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        double nj = 0.0;
        for (std::size_t k = 0; k < r; ++k) nj += counts[j * r + k];
        if (nj == 0.0) continue;
        for (std::size_t k = 0; k < r; ++k) {
            const double njk = counts[j * r + k];
            if (njk > 0.0) ll += njk * std::log(njk / nj);
        }
    }
    const double n = static_cast<double>(data.rows());
    const double penalty = 0.5 * std::log(n) * static_cast<double>((r - 1) * q);
    return ll - penalty;
}

namespace {

class ScoreCache {
public:
    explicit ScoreCache(const DiscreteFrame& data) : data_(data) {}

    double operator()(std::size_t node, std::vector<std::size_t> parents) {
        std::sort(parents.begin(), parents.end());
        auto key = std::make_pair(node, parents);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const double s = bic_local_score(data_, node, parents);
        cache_.emplace(std::move(key), s);
        return s;
    }

private:
    const DiscreteFrame& data_;
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

// True when `to` is reachable from `from` following parent->child edges.
bool reachable(const std::vector<std::vector<std::size_t>>& parents, std::size_t from, std::size_t to,
               std::pair<std::size_t, std::size_t> skip_edge) {
    const auto n = parents.size();
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (auto p : parents[v]) {
            if (p == skip_edge.first && v == skip_edge.second) continue;
            children[p].push_back(v);
        }
    }
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        for (auto c : children[v]) {
            if (!seen[c]) {
                seen[c] = true;
                stack.push_back(c);
            }
        }
    }
    return false;
}

std::vector<std::size_t> without(std::vector<std::size_t> v, std::size_t x) {
    v.erase(std::remove(v.begin(), v.end(), x), v.end());
    return v;
}

std::vector<std::size_t> with(std::vector<std::size_t> v, std::size_t x) {
    v.push_back(x);
    return v;
}

}  // namespace

BayesNet learn_structure(const DiscreteFrame& data, std::string_view target, const StructureOptions& opts) {
    data.index_of(target);
    check_codes(data);
    const std::size_t n = data.cols();
    std::size_t free_params = 0;
    for (const auto& v : data.variables) free_params += static_cast<std::size_t>(v.cardinality - 1);
    if (data.rows() < opts.min_rows || data.rows() < free_params) {
        throw InsufficientDataError(fmt::format(
            "structure learning needs at least {} rows and {} for the empty model, got {}",
            opts.min_rows, free_params, data.rows()));
    }

    std::vector<std::size_t> lex(n);
    std::iota(lex.begin(), lex.end(), 0);
    std::sort(lex.begin(), lex.end(),
              [&](auto a, auto b) { return data.variables[a].name < data.variables[b].name; });

    ScoreCache score(data);
    std::vector<std::vector<std::size_t>> parents(n);
    const auto max_parents = static_cast<std::size_t>(std::max(opts.max_parents, 0));

    enum class Move { Add, Remove, Reverse };
    while (true) {
        double best = opts.min_improvement;
        std::size_t best_from = 0, best_to = 0;
        Move best_move = Move::Add;
        bool found = false;
        auto consider = [&](double delta, std::size_t from, std::size_t to, Move m) {
            if (delta > best) {
                best = delta;
                best_from = from;
                best_to = to;
                best_move = m;
                found = true;
            }
        };
        for (auto from : lex) {
            for (auto to : lex) {
                if (from == to) continue;
                const double old_to = score(to, parents[to]);
                const bool edge = std::find(parents[to].begin(), parents[to].end(), from) != parents[to].end();
                if (edge) {
                    const double new_to = score(to, without(parents[to], from));
                    consider(new_to - old_to, from, to, Move::Remove);
                    if (parents[from].size() < max_parents &&
                        !reachable(parents, from, to, {from, to})) {
                        const double old_from = score(from, parents[from]);
                        const double new_from = score(from, with(parents[from], to));
                        consider(new_to + new_from - old_to - old_from, from, to, Move::Reverse);
                    }
                } else {
                    const bool reverse_edge =
                        std::find(parents[from].begin(), parents[from].end(), to) != parents[from].end();
                    if (reverse_edge || parents[to].size() >= max_parents) continue;
                    if (reachable(parents, to, from, {n, n})) continue;
                    const double new_to = score(to, with(parents[to], from));
                    consider(new_to - old_to, from, to, Move::Add);
                }
            }
        }
        if (!found) break;
        switch (best_move) {
            case Move::Add: parents[best_to].push_back(best_from); break;
            case Move::Remove: parents[best_to] = without(parents[best_to], best_from); break;
            case Move::Reverse:
                parents[best_to] = without(parents[best_to], best_from);
                parents[best_from].push_back(best_to);
                break;
        }
    }

    BayesNet net(data.variables);
    for (std::size_t v = 0; v < n; ++v) {
        std::sort(parents[v].begin(), parents[v].end());
        net.set_parents(v, parents[v]);
    }
    return net;
}

BayesNet fit_cpts(const BayesNet& structure, const DiscreteFrame& data) {
    structure.topological_order();
    // Map each network variable onto its data column by name.
    std::vector<std::size_t> col(structure.size());
    for (std::size_t v = 0; v < structure.size(); ++v) {
        col[v] = data.index_of(structure.variable(v).name);
        if (data.variables[col[v]].cardinality != structure.cardinality(v)) {
            throw ShapeError(fmt::format("cardinality mismatch for '{}'", structure.variable(v).name));
        }
    }
    check_codes(data);
    BayesNet net = structure;
    for (std::size_t v = 0; v < net.size(); ++v) {
        std::vector<std::size_t> pcols;
        for (auto p : net.parents(v)) pcols.push_back(col[p]);
        auto counts = family_counts(data, col[v], pcols);
        const auto r = static_cast<std::size_t>(net.cardinality(v));
        const std::size_t q = counts.size() / r;
        std::vector<double> table(counts.size());
        for (std::size_t j = 0; j < q; ++j) {
            double total = 0.0;
            for (std::size_t k = 0; k < r; ++k) total += counts[j * r + k];
            for (std::size_t k = 0; k < r; ++k) {
                table[j * r + k] = (counts[j * r + k] + 1.0) / (total + static_cast<double>(r));
            }
        }
        net.set_cpt(v, std::move(table));
    }
    return net;
}

nlohmann::json to_json(const BayesNet& net) {
    nlohmann::json vars = nlohmann::json::array();
    for (std::size_t v = 0; v < net.size(); ++v) {
        const auto& var = net.variable(v);
        vars.push_back({{"name", var.name},
                        {"cardinality", var.cardinality},
                        {"edges", var.edges},
                        {"parents", net.parents(v)},
                        {"cpt", net.cpt(v)}});
    }
    return {{"cpt_layout", "row-major; rows = parent configurations, last parent fastest"},
            {"variables", vars}};
}

BayesNet bayes_net_from_json(const nlohmann::json& j) {
    std::vector<DiscreteVariable> vars;
    for (const auto& v : j.at("variables")) {
        vars.push_back(DiscreteVariable{v.at("name").get<std::string>(), v.at("cardinality").get<int>(),
                                        v.at("edges").get<std::vector<double>>()});
    }
    BayesNet net(std::move(vars));
    std::size_t i = 0;
    for (const auto& v : j.at("variables")) {
        net.set_parents(i, v.at("parents").get<std::vector<std::size_t>>());
        ++i;
    }
    i = 0;
    for (const auto& v : j.at("variables")) {
        auto cpt = v.at("cpt").get<std::vector<double>>();
        if (!cpt.empty()) net.set_cpt(i, std::move(cpt));
        ++i;
    }
    net.topological_order();
    return net;
}

}  // namespace crn::pgm
