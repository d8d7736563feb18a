#include "cascade/branching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "cascade/util.hpp"

namespace cascade {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxGeneratedNodes = 50'000'000;

// Exact Binomial(k, p) by geometric skips between successes; O(k*p + 1).
int sample_binomial(Rng& rng, int k, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return k;
    const double log_q = std::log1p(-p);
    int count = 0;
    std::int64_t i = -1;
    for (;;) {
        i += 1 + static_cast<std::int64_t>(std::floor(std::log(rng.uniform01_pos()) / log_q));
        if (i >= k) return count;
        ++count;
    }
}

// Additively smoothed pmf over {0..d_max}.
std::vector<double> smoothed_pmf(const std::map<int, std::int64_t>& counts, std::int64_t total,
                                 double alpha, int d_max) {
    std::vector<double> pmf(static_cast<std::size_t>(d_max) + 1, 0.0);
    const double denom =
        static_cast<double>(total) + alpha * (static_cast<double>(d_max) + 1.0);
    if (denom <= 0.0) {
        // No observations and no smoothing: fall back to a point mass at 0.
        pmf[0] = 1.0;
        return pmf;
    }
    for (std::size_t v = 0; v < pmf.size(); ++v) pmf[v] = alpha / denom;
    for (const auto& [v, c] : counts)
        pmf[static_cast<std::size_t>(v)] = (static_cast<double>(c) + alpha) / denom;
    return pmf;
}

} // namespace

ModelKind model_kind_of(const BranchingModel& model) {
    return static_cast<ModelKind>(model.index());
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Baseline: return "baseline";
        case ModelKind::Degree: return "degree";
        case ModelKind::ConditionalDegree: return "conditional";
    }
    return "baseline";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "baseline") return ModelKind::Baseline;
    if (name == "degree") return ModelKind::Degree;
    if (name == "conditional") return ModelKind::ConditionalDegree;
    throw InvalidArgument("unknown model kind: " + name);
}

BranchingModel fit(ModelKind kind, const std::vector<Subtree>& subtrees,
                   double smoothing_alpha) {
    if (subtrees.empty()) throw InvalidArgument("fit: empty subtree sample");
    if (smoothing_alpha < 0) throw InvalidArgument("fit: smoothing_alpha must be >= 0");

    // Offspring observations over non-truncated nodes only: a node at the
    // depth limit has censored children.
    std::map<int, std::int64_t> marginal;
    std::map<int, std::int64_t> root_counts;
    std::map<int, std::map<int, std::int64_t>> cond_counts; // parent indegree -> child counts
    std::map<int, std::int64_t> cond_totals;
    std::int64_t n_obs = 0, root_obs = 0;
    std::int64_t indegree_sum = 0;
    int d_max = 0;

    for (const Subtree& st : subtrees) {
        const auto deg = st.indegrees();
        const auto dep = st.depths();
        for (std::size_t i = 0; i < st.size(); ++i) {
            if (dep[i] >= st.depth_limit) continue;
            ++n_obs;
            indegree_sum += deg[i];
            ++marginal[deg[i]];
            d_max = std::max(d_max, deg[i]);
            if (st.parent[i] < 0) {
                ++root_counts[deg[i]];
                ++root_obs;
            } else {
                const auto pi = static_cast<std::size_t>(st.parent[i]);
                ++cond_counts[deg[pi]][deg[i]];
                ++cond_totals[deg[pi]];
            }
        }
    }
    if (n_obs == 0)
        throw InvalidArgument("fit: every node sits at the depth limit; nothing to fit");

    switch (kind) {
        case ModelKind::Baseline: {
            BaselineModel m;
            m.k = std::max(1, d_max);
            m.p = static_cast<double>(indegree_sum) / (static_cast<double>(n_obs) * m.k);
            return m;
        }
        case ModelKind::Degree: {
            DegreeModel m;
            m.indegree_pmf.assign(static_cast<std::size_t>(d_max) + 1, 0.0);
            for (const auto& [v, c] : marginal)
                m.indegree_pmf[static_cast<std::size_t>(v)] =
                    static_cast<double>(c) / static_cast<double>(n_obs);
            return m;
        }
        case ModelKind::ConditionalDegree: {
            ConditionalDegreeModel m;
            m.smoothing_alpha = smoothing_alpha;
            m.root_pmf = smoothed_pmf(root_counts, root_obs, smoothing_alpha, d_max);
            m.cond_pmf.reserve(static_cast<std::size_t>(d_max) + 1);
            for (int j = 0; j <= d_max; ++j) {
                const auto cit = cond_counts.find(j);
                static const std::map<int, std::int64_t> empty;
                const auto& counts = cit == cond_counts.end() ? empty : cit->second;
                const auto tit = cond_totals.find(j);
                const std::int64_t total = tit == cond_totals.end() ? 0 : tit->second;
                m.cond_pmf.push_back(smoothed_pmf(counts, total, smoothing_alpha, d_max));
            }
            return m;
        }
    }
    throw InvalidArgument("unknown model kind");
}

namespace {

// Cumulative-table sampler for dense pmfs.
struct DenseSampler {
    std::vector<double> cumulative;
    explicit DenseSampler(const std::vector<double>& pmf) {
        cumulative.reserve(pmf.size());
        double s = 0;
        for (double p : pmf) {
            s += p;
            cumulative.push_back(s);
        }
    }
    int sample(Rng& rng) const {
        if (cumulative.back() <= 0.0) return 0;
        const double u = rng.uniform01() * cumulative.back();
        return static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                cumulative.begin());
    }
};

template <typename ChildCount>
Subtree generate_one(int depth, ChildCount&& child_count) {
    Subtree st;
    st.root = 0;
    st.depth_limit = depth;
    st.nodes.push_back(0);
    st.parent.push_back(-1);
    // frontier entries: (subtree index, realized indegree of its parent)
    std::vector<std::pair<std::int32_t, int>> frontier{{0, -1}};
    std::vector<std::pair<std::int32_t, int>> next;
    for (int level = 0; level < depth && !frontier.empty(); ++level) {
        next.clear();
        for (const auto& [si, parent_deg] : frontier) {
            const int c = child_count(level, parent_deg);
            for (int j = 0; j < c; ++j) {
                const auto ci = static_cast<std::int32_t>(st.nodes.size());
                if (st.nodes.size() >= kMaxGeneratedNodes)
                    throw std::runtime_error("generated subtree exceeds node budget");
                st.nodes.push_back(static_cast<NodeId>(ci));
                st.parent.push_back(si);
                next.emplace_back(ci, c);
            }
        }
        frontier.swap(next);
    }
    return st;
}

} // namespace

std::vector<Subtree> generate(const BranchingModel& model, std::size_t count, int depth,
                              Rng& rng) {
    if (depth < 0) throw InvalidArgument("generate: depth must be >= 0");
    std::vector<Subtree> out;
    out.reserve(count);

    if (const auto* b = std::get_if<BaselineModel>(&model)) {
        if (b->k < 1 || b->p < 0 || b->p > 1) throw InvalidArgument("bad baseline parameters");
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(generate_one(
                depth, [&](int, int) { return sample_binomial(rng, b->k, b->p); }));
        return out;
    }
    if (const auto* d = std::get_if<DegreeModel>(&model)) {
        if (d->indegree_pmf.empty()) throw InvalidArgument("degree model has empty pmf");
        const DenseSampler sampler(d->indegree_pmf);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(generate_one(depth, [&](int, int) { return sampler.sample(rng); }));
        return out;
    }
    const auto& c = std::get<ConditionalDegreeModel>(model);
    if (c.root_pmf.empty()) throw InvalidArgument("conditional model has empty root pmf");
    const DenseSampler root_sampler(c.root_pmf);
    std::vector<DenseSampler> row_samplers;
    row_samplers.reserve(c.cond_pmf.size());
    for (const auto& row : c.cond_pmf) row_samplers.emplace_back(row);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(generate_one(depth, [&](int level, int parent_deg) {
            if (level == 0) return root_sampler.sample(rng);
            const auto j = static_cast<std::size_t>(parent_deg);
            if (j >= row_samplers.size())
                throw std::runtime_error("conditional model missing row for parent in-degree " +
                                         std::to_string(parent_deg));
            return row_samplers[j].sample(rng);
        }));
    }
    return out;
}

namespace {

double log_binomial_pmf(int k, double p, int j) {
    if (j < 0 || j > k) return kNegInf;
    if (p <= 0.0) return j == 0 ? 0.0 : kNegInf;
    if (p >= 1.0) return j == k ? 0.0 : kNegInf;
    const double log_choose = std::lgamma(k + 1.0) - std::lgamma(j + 1.0) -
                              std::lgamma(static_cast<double>(k - j) + 1.0);
    return log_choose + j * std::log(p) + (k - j) * std::log1p(-p);
}

double pmf_at(const std::vector<double>& pmf, int v) {
    if (v < 0 || static_cast<std::size_t>(v) >= pmf.size()) return 0.0;
    return pmf[static_cast<std::size_t>(v)];
}

} // namespace

double loglik(const BranchingModel& model, const Subtree& subtree) {
    const auto deg = subtree.indegrees();
    const auto dep = subtree.depths();
    double total = 0.0;
    for (std::size_t i = 0; i < subtree.size(); ++i) {
        if (dep[i] >= subtree.depth_limit) continue; // offspring censored
        const int j = deg[i];
        double term = kNegInf;
        if (const auto* b = std::get_if<BaselineModel>(&model)) {
            term = log_binomial_pmf(b->k, b->p, j);
        } else if (const auto* d = std::get_if<DegreeModel>(&model)) {
            const double p = pmf_at(d->indegree_pmf, j);
            term = p > 0 ? std::log(p) : kNegInf;
        } else {
            const auto& c = std::get<ConditionalDegreeModel>(model);
            double p = 0.0;
            if (subtree.parent[i] < 0) {
                p = pmf_at(c.root_pmf, j);
            } else {
                const int pj = deg[static_cast<std::size_t>(subtree.parent[i])];
                if (pj >= 0 && static_cast<std::size_t>(pj) < c.cond_pmf.size())
                    p = pmf_at(c.cond_pmf[static_cast<std::size_t>(pj)], j);
            }
            term = p > 0 ? std::log(p) : kNegInf;
        }
        if (term == kNegInf) return kNegInf;
        total += term;
    }
    return total;
}

namespace {

void write_pmf(std::ostream& out, const std::vector<double>& pmf) {
    out << "pmf " << pmf.size() << "\n";
    for (std::size_t v = 0; v < pmf.size(); ++v)
        out << v << ' ' << format_sig(pmf[v], 9) << "\n";
}

std::vector<double> read_pmf(std::istream& in, std::string& line) {
    auto head = split_ws(line);
    if (head.size() != 2 || head[0] != "pmf") throw InvalidArgument("bad pmf header: " + line);
    const auto n = static_cast<std::size_t>(parse_int(head[1]));
    std::vector<double> pmf(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw InvalidArgument("truncated pmf table");
        auto tok = split_ws(line);
        if (tok.size() != 2) throw InvalidArgument("bad pmf row: " + line);
        const auto v = static_cast<std::size_t>(parse_int(tok[0]));
        if (v >= n) throw InvalidArgument("pmf value out of range: " + line);
        pmf[v] = parse_double(tok[1]);
    }
    return pmf;
}

} // namespace

void write_model(const BranchingModel& model, std::ostream& out) {
    out << "#model " << model_kind_name(model_kind_of(model)) << "\n";
    if (const auto* b = std::get_if<BaselineModel>(&model)) {
        out << "k " << b->k << "\n";
        out << "p " << format_sig(b->p, 9) << "\n";
    } else if (const auto* d = std::get_if<DegreeModel>(&model)) {
        write_pmf(out, d->indegree_pmf);
    } else {
        const auto& c = std::get<ConditionalDegreeModel>(model);
        out << "alpha " << format_sig(c.smoothing_alpha, 9) << "\n";
        out << "root\n";
        write_pmf(out, c.root_pmf);
        out << "rows " << c.cond_pmf.size() << "\n";
        for (std::size_t j = 0; j < c.cond_pmf.size(); ++j) {
            out << "row " << j << "\n";
            write_pmf(out, c.cond_pmf[j]);
        }
    }
}

BranchingModel read_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty model file");
    auto head = split_ws(line);
    if (head.size() != 2 || head[0] != "#model")
        throw InvalidArgument("bad model header: " + line);
    const ModelKind kind = model_kind_from_name(std::string(head[1]));

    auto expect_line = [&](const char* what) {
        if (!std::getline(in, line)) throw InvalidArgument(std::string("model file missing ") + what);
        return split_ws(line);
    };

    switch (kind) {
        case ModelKind::Baseline: {
            BaselineModel m;
            auto k_tok = expect_line("k");
            if (k_tok.size() != 2 || k_tok[0] != "k") throw InvalidArgument("bad model k line");
            m.k = static_cast<int>(parse_int(k_tok[1]));
            auto p_tok = expect_line("p");
            if (p_tok.size() != 2 || p_tok[0] != "p") throw InvalidArgument("bad model p line");
            m.p = parse_double(p_tok[1]);
            return m;
        }
        case ModelKind::Degree: {
            DegreeModel m;
            if (!std::getline(in, line)) throw InvalidArgument("model file missing pmf");
            m.indegree_pmf = read_pmf(in, line);
            return m;
        }
        case ModelKind::ConditionalDegree: {
            ConditionalDegreeModel m;
            auto a_tok = expect_line("alpha");
            if (a_tok.size() != 2 || a_tok[0] != "alpha")
                throw InvalidArgument("bad model alpha line");
            m.smoothing_alpha = parse_double(a_tok[1]);
            auto r_tok = expect_line("root");
            if (r_tok.size() != 1 || r_tok[0] != "root")
                throw InvalidArgument("bad model root line");
            if (!std::getline(in, line)) throw InvalidArgument("model file missing root pmf");
            m.root_pmf = read_pmf(in, line);
            auto rows_tok = expect_line("rows");
            if (rows_tok.size() != 2 || rows_tok[0] != "rows")
                throw InvalidArgument("bad model rows line");
            const auto rows = static_cast<std::size_t>(parse_int(rows_tok[1]));
            m.cond_pmf.reserve(rows);
            for (std::size_t j = 0; j < rows; ++j) {
                auto row_tok = expect_line("row");
                if (row_tok.size() != 2 || row_tok[0] != "row")
                    throw InvalidArgument("bad model row line");
                if (!std::getline(in, line)) throw InvalidArgument("model file missing row pmf");
                m.cond_pmf.push_back(read_pmf(in, line));
            }
            return m;
        }
    }
    throw InvalidArgument("unknown model kind in file");
}

void save_model(const BranchingModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::ostringstream buf;
    write_model(model, buf);
    out << buf.str();
    if (!out) throw std::runtime_error("write failed: " + path);
}

BranchingModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    return read_model(in);
}

} // namespace cascade
