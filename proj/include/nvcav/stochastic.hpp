#pragma once

#include "nvcav/rate_matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nvcav
{

// A transition whose firing emits a photon on `channel`.
struct RadiativeEdge
{
    std::size_t from = 0;
    std::size_t to = 0;
    std::uint8_t channel = 0;
};

// Arrival times in integer picoseconds, strictly increasing, all below
// duration_ps.
struct TimeTagStream
{
    std::vector<std::uint64_t> tags_ps;
    std::vector<std::uint8_t> channels;
    std::uint64_t duration_ps = 0;
    std::uint32_t seed = 0;
    // The trajectory reached a state without exits before the end.
    bool terminated_early = false;

    std::size_t size() const { return tags_ps.size(); }
    double duration_ns() const { return static_cast<double>(duration_ps) * 1e-3; }
    void validate() const;
};

struct GillespieOptions
{
    // Start state; drawn from the stationary distribution when empty.
    std::optional<std::size_t> initial_state;
    // Tags closer than this to the previous tag on the same channel are dropped.
    double dead_time_ns = 0.0;
};

// Exact stochastic trajectory of the generator (rates in 1/us, time in ns).
TimeTagStream gillespie(const RateMatrix &generator, const std::vector<RadiativeEdge> &radiative_edges,
                        double duration_ns, std::uint32_t seed, const GillespieOptions &options = {});

// Photon counts only, for runs too long to keep every tag: total and per
// batch of batch_ns.
struct PhotonCounts
{
    std::uint64_t total = 0;
    std::vector<std::uint64_t> batches;
    bool terminated_early = false;
};
PhotonCounts gillespie_counts(const RateMatrix &generator, const std::vector<RadiativeEdge> &radiative_edges,
                              double duration_ns, std::uint32_t seed, double batch_ns,
                              const GillespieOptions &options = {});

// Reassigns each tag to channel 0 or 1 with probability 1/2 (a 50/50 beam
// splitter in front of two detectors).
TimeTagStream split_channels(const TimeTagStream &stream, std::uint32_t seed);

enum class CorrelationMode
{
    full,      // every pair within max_delay
    start_stop // each start with the next stop only
};

enum class ChannelMode
{
    merged, // autocorrelation ignoring channel labels
    cross   // pairs on different channels, |delay|
};

struct CorrelationOptions
{
    double bin_width_ns = 1.0;
    double max_delay_us = 1.0;
    // Normalisation window [start, end] in us; must lie inside the histogram.
    double norm_start_us = 0.8;
    double norm_end_us = 1.0;
    CorrelationMode mode = CorrelationMode::full;
    ChannelMode channels = ChannelMode::merged;
};

struct CorrelationHistogram
{
    std::vector<double> bin_edges_ns;
    std::vector<double> counts;
    // counts divided by their mean inside the normalisation window.
    std::vector<double> g2;
    double norm_start_us = 0.0;
    double norm_end_us = 0.0;
    double norm_mean = 0.0;

    std::size_t bins() const { return counts.size(); }
    double bin_center_ns(std::size_t i) const { return 0.5 * (bin_edges_ns[i] + bin_edges_ns[i + 1]); }
};

// Throws std::domain_error on an empty stream and when the normalisation
// window holds no counts.
CorrelationHistogram correlate(const TimeTagStream &stream, const CorrelationOptions &options);

// Expected full-correlation pair counts per bin for a stationary source with
// normalised correlation g2(tau_ns), given n tags over duration_ns:
// (n/T)^2 * integral over the bin of g2(tau) (T - tau).
std::vector<double> expected_pair_counts(const std::function<double(double)> &g2, const std::vector<double> &edges_ns,
                                         double n, double duration_ns);

struct ChiSquare
{
    double chi2 = 0.0;
    std::size_t bins = 0;
    double reduced() const { return bins ? chi2 / static_cast<double>(bins) : 0.0; }
};

// Pearson chi-square of observed against expected counts, over bins with
// expected >= min_expected.
ChiSquare pearson_chi2(const std::vector<double> &observed, const std::vector<double> &expected,
                       double min_expected = 5.0);

// Binary persistence: 16-byte header (magic "TT", u16 version, u32 seed,
// u64 duration in ps) then packed (u64 ps, u8 channel) records,
// little-endian.
std::string encode_tags(const TimeTagStream &stream);
TimeTagStream decode_tags(std::string_view bytes);
void write_tags(const std::filesystem::path &path, const TimeTagStream &stream);
TimeTagStream read_tags(const std::filesystem::path &path);
// CSV export with columns time_ps, channel.
std::string tags_to_csv(const TimeTagStream &stream);

} // namespace nvcav
