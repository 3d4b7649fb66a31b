#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace msnn {

// Binary directed adjacency over hidden neurons: adj(i, j) = 1 enables the
// synapse i -> j. The diagonal is always zero; triad classes are defined on
// simple directed graphs.
struct MotifMask {
    Eigen::MatrixXf adj;

    int n() const { return static_cast<int>(adj.rows()); }
    long edge_count() const;
    double density() const; // edges / (n * (n - 1))

    static MotifMask zeros(int n);
    static MotifMask full(int n); // all off-diagonal edges
    void validate() const;        // entries in {0, 1}, zero diagonal
};

// Counts and significance of the 13 weakly connected 3-node directed
// subgraph classes. Index k holds class k+1.
struct MotifCensus {
    std::array<long, 13> counts{};
    std::array<double, 13> p_values{};
    std::array<double, 13> plausible_freq{};

    long total() const;
    double frequency(int class_index) const; // counts[k] / total, 0 if empty
};

struct EnsembleConfig {
    int n_controls = 2000;
    std::uint64_t seed = 0;
    int n_threads = 1;
};

// Threshold rule turning learned recurrent weights into a mask:
//   mean-abs      enable |w| >= mean(|w|) over off-diagonal entries
//   topk:<frac>   enable the top <frac> fraction of off-diagonal entries
//   abs:<theta>   enable |w| >= theta
// Zero weights never produce edges.
struct ThresholdRule {
    enum class Kind { mean_abs, topk, abs_theta };
    Kind kind = Kind::mean_abs;
    double param = 0.0;

    static ThresholdRule parse(const std::string& text);
    std::string to_string() const;
};

MotifMask binarize(const Eigen::MatrixXf& w_rec, const ThresholdRule& rule = {});

// Exact census of weakly connected induced triples, classified against the
// canonical triad table. Enumeration walks neighborhood bitsets so only
// connected triples are visited.
MotifCensus triad_census(const MotifMask& mask);

// Compares observed counts against `n_controls` random graphs with the same
// node and edge count (uniform edge placement, no self-loops).
// p_value[k] = fraction of controls whose count reaches the observed count;
// plausible_freq[k] = frequency[k] * (1 - p_value[k]).
MotifCensus significance(const MotifMask& mask, const MotifCensus& census,
                         const EnsembleConfig& cfg);

// Elementwise union of two masks of equal shape.
MotifMask integrate(const MotifMask& mask_s, const MotifMask& mask_t);

// Canonical representative of each class, as "i->j;..." edge lists over
// nodes {0,1,2}; printed in every census report.
const std::array<std::string, 13>& triad_canonical_edges();

// Mask file: first line `n`, then one `i j` edge per line (0-indexed).
void write_mask(const std::string& path, const MotifMask& mask);
MotifMask read_mask(const std::string& path);

// CSV report: class_id, canonical_edges, count, frequency, p_value,
// plausible_frequency.
void write_census_csv(const std::string& path, const MotifCensus& census);

} // namespace msnn
