#include "crn/pgm/inference.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::pgm {

namespace {

// Table over `vars` (sorted ascending), row-major with the last variable fastest.
struct Factor {
    std::vector<std::size_t> vars;
    std::vector<std::size_t> cards;
    std::vector<double> values;

    std::size_t stride(std::size_t pos) const {
        std::size_t s = 1;
        for (std::size_t i = pos + 1; i < cards.size(); ++i) s *= cards[i];
        return s;
    }
};

Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
    for (auto v : out.vars) {
        auto ia = std::find(a.vars.begin(), a.vars.end(), v);
        out.cards.push_back(ia != a.vars.end() ? a.cards[ia - a.vars.begin()]
                                               : b.cards[std::find(b.vars.begin(), b.vars.end(), v) - b.vars.begin()]);
    }
    std::size_t total = 1;
    for (auto c : out.cards) total *= c;
    out.values.assign(total, 0.0);

    // Strides of a and b expressed over out's variables (0 where absent).
    std::vector<std::size_t> sa(out.vars.size(), 0), sb(out.vars.size(), 0);
    for (std::size_t i = 0; i < out.vars.size(); ++i) {
        if (auto it = std::find(a.vars.begin(), a.vars.end(), out.vars[i]); it != a.vars.end()) {
            sa[i] = a.stride(static_cast<std::size_t>(it - a.vars.begin()));
        }
        if (auto it = std::find(b.vars.begin(), b.vars.end(), out.vars[i]); it != b.vars.end()) {
            sb[i] = b.stride(static_cast<std::size_t>(it - b.vars.begin()));
        }
    }
    std::vector<std::size_t> idx(out.vars.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t k = 0; k < total; ++k) {
        out.values[k] = a.values[ia] * b.values[ib];
        for (std::size_t i = out.vars.size(); i-- > 0;) {
            if (++idx[i] < out.cards[i]) {
                ia += sa[i];
                ib += sb[i];
                break;
            }
            ia -= sa[i] * (out.cards[i] - 1);
            ib -= sb[i] * (out.cards[i] - 1);
            idx[i] = 0;
        }
    }
    return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
    const auto pos = static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
    Factor out;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        if (i == pos) continue;
        out.vars.push_back(f.vars[i]);
        out.cards.push_back(f.cards[i]);
    }
    const std::size_t inner = f.stride(pos);
    const std::size_t card = f.cards[pos];
    const std::size_t outer = f.values.size() / (inner * card);
    out.values.assign(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t c = 0; c < card; ++c) {
            for (std::size_t i = 0; i < inner; ++i) {
                out.values[o * inner + i] += f.values[(o * card + c) * inner + i];
            }
        }
    }
    return out;
}

Factor restrict_to(const Factor& f, std::size_t var, int state) {
    auto it = std::find(f.vars.begin(), f.vars.end(), var);
    if (it == f.vars.end()) return f;
    const auto pos = static_cast<std::size_t>(it - f.vars.begin());
    Factor out;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        if (i == pos) continue;
        out.vars.push_back(f.vars[i]);
        out.cards.push_back(f.cards[i]);
    }
    const std::size_t inner = f.stride(pos);
    const std::size_t card = f.cards[pos];
    const std::size_t outer = f.values.size() / (inner * card);
    out.values.resize(outer * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            out.values[o * inner + i] = f.values[(o * card + static_cast<std::size_t>(state)) * inner + i];
        }
    }
    return out;
}

Factor cpt_factor(const BayesNet& net, std::size_t v) {
    // The CPT is indexed (parents in listed order..., v); reorder into sorted variables.
    std::vector<std::size_t> scope = net.parents(v);
    scope.push_back(v);
    Factor f;
    f.vars = scope;
    std::sort(f.vars.begin(), f.vars.end());
    for (auto x : f.vars) f.cards.push_back(static_cast<std::size_t>(net.cardinality(x)));
    std::size_t total = 1;
    for (auto c : f.cards) total *= c;
    f.values.resize(total);

    std::vector<int> assignment(net.size(), 0);
    std::vector<std::size_t> idx(f.vars.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        for (std::size_t i = 0; i < f.vars.size(); ++i) assignment[f.vars[i]] = static_cast<int>(idx[i]);
        f.values[k] = net.prob(v, assignment);
        for (std::size_t i = f.vars.size(); i-- > 0;) {
            if (++idx[i] < f.cards[i]) break;
            idx[i] = 0;
        }
    }
    return f;
}

void check_query(const BayesNet& net, const Evidence& evidence, std::size_t query) {
    if (query >= net.size()) throw LookupError(fmt::format("unknown query variable {}", query));
    for (const auto& [v, s] : evidence) {
        if (v >= net.size()) throw LookupError(fmt::format("unknown evidence variable {}", v));
        if (s < 0 || s >= net.cardinality(v)) {
            throw ContractError(fmt::format("evidence state {} out of range for '{}'", s, net.variable(v).name));
        }
    }
    if (evidence.count(query)) throw ContractError("query variable is also observed");
    if (!net.has_cpts()) throw ContractError("network has no fitted CPTs");
}

std::vector<double> normalized(std::vector<double> p) {
    const double z = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(z > 0.0)) throw ZeroProbabilityError("evidence has zero probability under the model");
    for (auto& x : p) x /= z;
    return p;
}

}  // namespace

std::vector<double> infer(const BayesNet& net, const Evidence& evidence, std::size_t query) {
    check_query(net, evidence, query);

    // Variables outside the ancestral closure of {query} and evidence sum to one.
    std::vector<bool> keep(net.size(), false);
    std::vector<std::size_t> stack{query};
    for (const auto& [v, _] : evidence) stack.push_back(v);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (keep[v]) continue;
        keep[v] = true;
        for (auto p : net.parents(v)) stack.push_back(p);
    }

    std::vector<Factor> factors;
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (!keep[v]) continue;
        Factor f = cpt_factor(net, v);
        for (const auto& [ev, state] : evidence) f = restrict_to(f, ev, state);
        factors.push_back(std::move(f));
    }

    std::set<std::size_t> hidden;
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (keep[v] && v != query && !evidence.count(v)) hidden.insert(v);
    }

    // Greedy min-size elimination; ties go to the lower index.
    while (!hidden.empty()) {
        std::size_t best_var = 0, best_size = SIZE_MAX;
        for (auto v : hidden) {
            std::set<std::size_t> scope;
            for (const auto& f : factors) {
                if (std::binary_search(f.vars.begin(), f.vars.end(), v)) scope.insert(f.vars.begin(), f.vars.end());
            }
            std::size_t size = 1;
            for (auto s : scope) size *= static_cast<std::size_t>(net.cardinality(s));
            if (size < best_size) {
                best_size = size;
                best_var = v;
            }
        }
        hidden.erase(best_var);
        std::vector<Factor> rest;
        std::optional<Factor> prod;
        for (auto& f : factors) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), best_var)) {
                prod = prod ? multiply(*prod, f) : std::move(f);
            } else {
                rest.push_back(std::move(f));
            }
        }
        if (prod) rest.push_back(sum_out(*prod, best_var));
        factors = std::move(rest);
    }

    Factor result{{}, {}, {1.0}};
    for (const auto& f : factors) result = multiply(result, f);
    if (result.vars != std::vector<std::size_t>{query}) {
        throw ContractError("variable elimination left an unexpected scope");
    }
    return normalized(result.values);
}

std::vector<double> brute_force_joint(const BayesNet& net, const Evidence& evidence, std::size_t query) {
    check_query(net, evidence, query);
    std::size_t states = 1;
    for (std::size_t v = 0; v < net.size(); ++v) {
        states *= static_cast<std::size_t>(net.cardinality(v));
        if (states > kOracleStateLimit) {
            throw OracleLimitError("joint state space exceeds the brute-force oracle limit");
        }
    }
    std::vector<double> p(static_cast<std::size_t>(net.cardinality(query)), 0.0);
    std::vector<int> a(net.size(), 0);
    for (std::size_t k = 0; k < states; ++k) {
        bool consistent = true;
        for (const auto& [v, s] : evidence) {
            if (a[v] != s) {
                consistent = false;
                break;
            }
        }
        if (consistent) {
            double joint = 1.0;
            for (std::size_t v = 0; v < net.size(); ++v) joint *= net.prob(v, a);
            p[static_cast<std::size_t>(a[query])] += joint;
        }
        for (std::size_t v = net.size(); v-- > 0;) {
            if (++a[v] < net.cardinality(v)) break;
            a[v] = 0;
        }
    }
    return normalized(std::move(p));
}

}  // namespace crn::pgm
