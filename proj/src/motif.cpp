#include "msnn/motif.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "msnn/errors.hpp"
#include "msnn/rng.hpp"

namespace msnn {

namespace {

// Edge-list representatives of the 13 connected triad classes over nodes
// {0,1,2}, ordered by arc count: the three 2-arc shapes (in-star, chain,
// out-star), the four 3-arc shapes (mutual dyad with an incoming/outgoing
// spoke, feed-forward triangle, cycle), the four 4-arc shapes, the single
// 5-arc shape, and the complete triad.
const std::array<std::vector<std::pair<int, int>>, 13> kCanonicalTriads = {{
    {{0, 1}, {2, 1}},                          // 1: 0->1<-2
    {{0, 1}, {1, 2}},                          // 2: 0->1->2
    {{1, 0}, {1, 2}},                          // 3: 0<-1->2
    {{0, 1}, {1, 0}, {2, 0}},                  // 4: 0<->1, 2->0
    {{0, 1}, {1, 0}, {0, 2}},                  // 5: 0<->1, 0->2
    {{0, 1}, {0, 2}, {1, 2}},                  // 6: feed-forward triangle
    {{0, 1}, {1, 2}, {2, 0}},                  // 7: cycle
    {{0, 1}, {1, 0}, {0, 2}, {2, 0}},          // 8: two mutual dyads
    {{0, 1}, {1, 0}, {2, 0}, {2, 1}},          // 9: 0<->1, both spokes in
    {{0, 1}, {1, 0}, {0, 2}, {1, 2}},          // 10: 0<->1, both spokes out
    {{0, 1}, {1, 0}, {0, 2}, {2, 1}},          // 11: 0<->1, flow-through
    {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}},  // 12: five arcs
    {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}}, // 13: complete
}};

// 6-bit code of a labeled 3-node digraph: bit order
// (0->1, 1->0, 0->2, 2->0, 1->2, 2->1).
int code_bit(int from, int to) {
    static const int table[3][3] = {{-1, 0, 2}, {1, -1, 4}, {3, 5, -1}};
    return table[from][to];
}

unsigned perm_code(unsigned code, const int perm[3]) {
    unsigned out = 0;
    for (int from = 0; from < 3; ++from)
        for (int to = 0; to < 3; ++to) {
            if (from == to) continue;
            if (code & (1u << code_bit(from, to)))
                out |= 1u << code_bit(perm[from], perm[to]);
        }
    return out;
}

unsigned canonical_code(unsigned code) {
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    unsigned best = 63;
    for (const auto& perm : perms) best = std::min(best, perm_code(code, perm));
    return best;
}

bool code_connected(unsigned code) {
    const int und_01 = (code & ((1u << 0) | (1u << 1))) ? 1 : 0;
    const int und_02 = (code & ((1u << 2) | (1u << 3))) ? 1 : 0;
    const int und_12 = (code & ((1u << 4) | (1u << 5))) ? 1 : 0;
    return und_01 + und_02 + und_12 >= 2;
}

// class id (1..13) per 6-bit code, 0 for disconnected shapes.
struct TriadTable {
    std::array<std::uint8_t, 64> cls{};
    TriadTable() {
        std::array<unsigned, 13> canon{};
        for (int k = 0; k < 13; ++k) {
            unsigned code = 0;
            for (const auto& [from, to] : kCanonicalTriads[k])
                code |= 1u << code_bit(from, to);
            canon[k] = canonical_code(code);
        }
        for (unsigned code = 0; code < 64; ++code) {
            cls[code] = 0;
            if (!code_connected(code)) continue;
            const unsigned c = canonical_code(code);
            for (int k = 0; k < 13; ++k)
                if (canon[k] == c) {
                    cls[code] = static_cast<std::uint8_t>(k + 1);
                    break;
                }
        }
    }
};

const TriadTable& triad_table() {
    static const TriadTable table;
    return table;
}

// Row-major bitset adjacency for census enumeration.
struct BitGraph {
    int n = 0;
    int words = 0;
    std::vector<std::uint64_t> out; // out[i * words + w]
    std::vector<std::uint64_t> und; // either direction

    explicit BitGraph(int nodes)
        : n(nodes), words((nodes + 63) / 64), out(std::size_t(nodes) * words, 0),
          und(std::size_t(nodes) * words, 0) {}

    void add_edge(int i, int j) {
        out[std::size_t(i) * words + j / 64] |= 1ull << (j % 64);
        und[std::size_t(i) * words + j / 64] |= 1ull << (j % 64);
        und[std::size_t(j) * words + i / 64] |= 1ull << (i % 64);
    }

    bool has(int i, int j) const {
        return (out[std::size_t(i) * words + j / 64] >> (j % 64)) & 1u;
    }

    bool linked(int i, int j) const {
        return (und[std::size_t(i) * words + j / 64] >> (j % 64)) & 1u;
    }
};

BitGraph to_bitgraph(const MotifMask& mask) {
    BitGraph g(mask.n());
    for (int i = 0; i < mask.n(); ++i)
        for (int j = 0; j < mask.n(); ++j)
            if (i != j && mask.adj(i, j) != 0.0f) g.add_edge(i, j);
    return g;
}

MotifCensus census_bitgraph(const BitGraph& g) {
    MotifCensus census;
    const auto& table = triad_table();
    const int words = g.words;
    std::vector<std::uint64_t> candidates(words);
    for (int i = 0; i < g.n; ++i) {
        const std::uint64_t* und_i = &g.und[std::size_t(i) * words];
        for (int j = i + 1; j < g.n; ++j) {
            const std::uint64_t* und_j = &g.und[std::size_t(j) * words];
            const bool pair_linked = g.linked(i, j);
            // Connected triples through this (i, j) pair: any common or
            // single-sided neighbor if the pair itself is linked, otherwise a
            // node adjacent to both ends.
            for (int w = 0; w < words; ++w)
                candidates[w] = pair_linked ? (und_i[w] | und_j[w]) : (und_i[w] & und_j[w]);
            // Restrict to k > j so each triple is visited once.
            const int base_word = (j + 1) / 64;
            const int base_bit = (j + 1) % 64;
            if (base_word < words && base_bit != 0)
                candidates[base_word] &= ~((1ull << base_bit) - 1);
            for (int w = 0; w < base_word; ++w) candidates[w] = 0;

            for (int w = base_word; w < words; ++w) {
                std::uint64_t bits = candidates[w];
                while (bits) {
                    const int k = w * 64 + std::countr_zero(bits);
                    bits &= bits - 1;
                    if (k >= g.n) break;
                    unsigned code = 0;
                    if (g.has(i, j)) code |= 1u << 0;
                    if (g.has(j, i)) code |= 1u << 1;
                    if (g.has(i, k)) code |= 1u << 2;
                    if (g.has(k, i)) code |= 1u << 3;
                    if (g.has(j, k)) code |= 1u << 4;
                    if (g.has(k, j)) code |= 1u << 5;
                    const std::uint8_t cls = table.cls[code];
                    if (cls) ++census.counts[cls - 1];
                }
            }
        }
    }
    return census;
}

// Uniform simple directed graph with exactly m edges via Floyd's sampling
// over the n*(n-1) ordered off-diagonal pairs.
BitGraph random_gnm(int n, long m, Rng& rng) {
    BitGraph g(n);
    const std::uint64_t capacity = std::uint64_t(n) * (n - 1);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(m) * 2);
    for (std::uint64_t j = capacity - std::uint64_t(m); j < capacity; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        const std::uint64_t pick = chosen.insert(t).second ? t : j;
        if (pick != t) chosen.insert(pick);
        const int i = static_cast<int>(pick / (n - 1));
        const int r = static_cast<int>(pick % (n - 1));
        const int k = r < i ? r : r + 1;
        g.add_edge(i, k);
    }
    return g;
}

} // namespace

long MotifMask::edge_count() const {
    long count = 0;
    for (int i = 0; i < n(); ++i)
        for (int j = 0; j < n(); ++j)
            if (i != j && adj(i, j) != 0.0f) ++count;
    return count;
}

double MotifMask::density() const {
    const long cap = long(n()) * (n() - 1);
    return cap == 0 ? 0.0 : double(edge_count()) / double(cap);
}

MotifMask MotifMask::zeros(int n) {
    MotifMask m;
    m.adj = Eigen::MatrixXf::Zero(n, n);
    return m;
}

MotifMask MotifMask::full(int n) {
    MotifMask m;
    m.adj = Eigen::MatrixXf::Ones(n, n);
    m.adj.diagonal().setZero();
    return m;
}

void MotifMask::validate() const {
    if (adj.rows() != adj.cols()) throw MaskError("mask must be square");
    for (int i = 0; i < n(); ++i)
        for (int j = 0; j < n(); ++j) {
            const float v = adj(i, j);
            if (v != 0.0f && v != 1.0f) throw MaskError("mask entries must be 0 or 1");
            if (i == j && v != 0.0f) throw MaskError("mask diagonal must be zero");
        }
}

long MotifCensus::total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

double MotifCensus::frequency(int class_index) const {
    const long t = total();
    return t == 0 ? 0.0 : double(counts[class_index]) / double(t);
}

ThresholdRule ThresholdRule::parse(const std::string& text) {
    ThresholdRule rule;
    if (text == "mean-abs") {
        rule.kind = Kind::mean_abs;
        return rule;
    }
    if (text.rfind("topk:", 0) == 0) {
        rule.kind = Kind::topk;
        rule.param = std::stod(text.substr(5));
        if (rule.param < 0.0 || rule.param > 1.0)
            throw ConfigError("topk fraction must lie in [0, 1]");
        return rule;
    }
    if (text.rfind("abs:", 0) == 0) {
        rule.kind = Kind::abs_theta;
        rule.param = std::stod(text.substr(4));
        return rule;
    }
    throw ConfigError("unknown threshold rule: " + text);
}

std::string ThresholdRule::to_string() const {
    switch (kind) {
        case Kind::mean_abs: return "mean-abs";
        case Kind::topk: return "topk:" + std::to_string(param);
        case Kind::abs_theta: return "abs:" + std::to_string(param);
    }
    return "mean-abs";
}

MotifMask binarize(const Eigen::MatrixXf& w_rec, const ThresholdRule& rule) {
    if (w_rec.rows() != w_rec.cols()) throw ShapeError("recurrent weights must be square");
    const int n = static_cast<int>(w_rec.rows());
    MotifMask mask = MotifMask::zeros(n);

    double theta = 0.0;
    switch (rule.kind) {
        case ThresholdRule::Kind::mean_abs: {
            double sum = 0.0;
            long count = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) {
                        sum += std::abs(double(w_rec(i, j)));
                        ++count;
                    }
            theta = count == 0 ? 0.0 : sum / double(count);
            break;
        }
        case ThresholdRule::Kind::topk: {
            std::vector<double> mags;
            mags.reserve(std::size_t(n) * (n - 1));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) mags.push_back(std::abs(double(w_rec(i, j))));
            const auto keep = static_cast<std::size_t>(std::llround(rule.param * double(mags.size())));
            if (keep == 0) return mask;
            std::nth_element(mags.begin(), mags.begin() + (keep - 1), mags.end(),
                             std::greater<double>());
            theta = mags[keep - 1];
            break;
        }
        case ThresholdRule::Kind::abs_theta:
            theta = rule.param;
            break;
    }

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double mag = std::abs(double(w_rec(i, j)));
            if (mag > 0.0 && mag >= theta) mask.adj(i, j) = 1.0f;
        }
    return mask;
}

MotifCensus triad_census(const MotifMask& mask) {
    mask.validate();
    return census_bitgraph(to_bitgraph(mask));
}

MotifCensus significance(const MotifMask& mask, const MotifCensus& census,
                         const EnsembleConfig& cfg) {
    if (cfg.n_controls < 1) throw ConfigError("need at least one control graph");
    const int n = mask.n();
    const long m = mask.edge_count();

    std::array<long, 13> ge_counts{};
    const int n_threads = std::max(1, cfg.n_threads);
    if (n_threads == 1) {
        for (int c = 0; c < cfg.n_controls; ++c) {
            Rng rng(cfg.seed + std::uint64_t(c));
            const MotifCensus control = census_bitgraph(random_gnm(n, m, rng));
            for (int k = 0; k < 13; ++k)
                if (control.counts[k] >= census.counts[k]) ++ge_counts[k];
        }
    } else {
        // Controls are independent and their >= indicators sum associatively,
        // so chunked threads keep the result identical to the serial order.
        std::vector<std::array<long, 13>> partial(n_threads);
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                partial[t] = {};
                for (int c = t; c < cfg.n_controls; c += n_threads) {
                    Rng rng(cfg.seed + std::uint64_t(c));
                    const MotifCensus control = census_bitgraph(random_gnm(n, m, rng));
                    for (int k = 0; k < 13; ++k)
                        if (control.counts[k] >= census.counts[k]) ++partial[t][k];
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& p : partial)
            for (int k = 0; k < 13; ++k) ge_counts[k] += p[k];
    }

    MotifCensus out = census;
    for (int k = 0; k < 13; ++k) {
        out.p_values[k] = double(ge_counts[k]) / double(cfg.n_controls);
        out.plausible_freq[k] = out.frequency(k) * (1.0 - out.p_values[k]);
    }
    return out;
}

MotifMask integrate(const MotifMask& mask_s, const MotifMask& mask_t) {
    if (mask_s.adj.rows() != mask_t.adj.rows() || mask_s.adj.cols() != mask_t.adj.cols())
        throw ShapeError("mask shapes differ");
    MotifMask out;
    out.adj = mask_s.adj.cwiseMax(mask_t.adj);
    return out;
}

const std::array<std::string, 13>& triad_canonical_edges() {
    static const std::array<std::string, 13> names = [] {
        std::array<std::string, 13> out;
        for (int k = 0; k < 13; ++k) {
            std::string s;
            for (const auto& [from, to] : kCanonicalTriads[k]) {
                if (!s.empty()) s += ';';
                s += std::to_string(from) + "->" + std::to_string(to);
            }
            out[k] = s;
        }
        return out;
    }();
    return names;
}

void write_mask(const std::string& path, const MotifMask& mask) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write mask " + path);
    out << mask.n() << '\n';
    for (int i = 0; i < mask.n(); ++i)
        for (int j = 0; j < mask.n(); ++j)
            if (i != j && mask.adj(i, j) != 0.0f) out << i << ' ' << j << '\n';
}

MotifMask read_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mask " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("mask file empty: " + path);
    int n;
    try {
        n = std::stoi(line);
    } catch (const std::exception&) {
        throw ParseError("mask line 1: expected node count");
    }
    if (n < 0) throw ParseError("mask line 1: negative node count");
    MotifMask mask = MotifMask::zeros(n);
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        int i, j;
        if (!(ss >> i >> j))
            throw ParseError("mask line " + std::to_string(line_no) + ": expected `i j`");
        if (i < 0 || j < 0 || i >= n || j >= n || i == j)
            throw ParseError("mask line " + std::to_string(line_no) + ": bad edge " +
                             std::to_string(i) + " " + std::to_string(j));
        mask.adj(i, j) = 1.0f;
    }
    return mask;
}

void write_census_csv(const std::string& path, const MotifCensus& census) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write census " + path);
    out << "class_id,canonical_edges,count,frequency,p_value,plausible_frequency\n";
    char buf[160];
    for (int k = 0; k < 13; ++k) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%ld,%.9f,%.9f,%.9f\n", k + 1,
                      triad_canonical_edges()[k].c_str(), census.counts[k],
                      census.frequency(k), census.p_values[k], census.plausible_freq[k]);
        out << buf;
    }
}

} // namespace msnn
