#pragma once

#include "nvcav/rate_matrix.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nvcav
{

class KeyValueConfig;

// Fixed state labels of the ten-state NV-/NV0 model.
const std::vector<std::string> &nv10_labels();

enum class SegmentKind
{
    repump,
    resonant,
    wait
};

enum class EdgeChannel
{
    decay,   // every segment
    green,   // repump only, scaled by power (mW)
    resonant // probe only
};

struct EdgeSpec
{
    std::size_t from = 0;
    std::size_t to = 0;
    EdgeChannel channel = EdgeChannel::decay;
    std::vector<std::string> factors;
    bool zpl = false;
    std::size_t line = 0;
};

// Rate parameters plus the edge list, both read from a key-value file.
class Nv10Model
{
public:
    static Nv10Model parse(const KeyValueConfig &cfg);
    // Built-in copy of data/nv10_rates.conf.
    static Nv10Model defaults();
    static const char *default_text();

    double parameter(const std::string &name) const;
    void set_parameter(const std::string &name, double value);
    const std::map<std::string, double> &parameters() const { return params_; }
    const std::vector<EdgeSpec> &edges() const { return edges_; }

    double edge_rate(const EdgeSpec &e) const;
    RateMatrix generator(SegmentKind kind, double repump_mw) const;

    // Photon flux through the zpl-flagged edges (1/us) for population p.
    double zpl_flux(const Eigen::VectorXd &p) const;

private:
    std::map<std::string, double> params_;
    std::vector<EdgeSpec> edges_;
};

struct SegmentModel
{
    SegmentKind kind = SegmentKind::wait;
    double duration_us = 0.0;
    RateMatrix generator;
};

struct PulseTimings
{
    double repump_us = 1.8;
    double wait_us = 0.4;
    double resonant_us = 31.0;
};

// repump, wait, resonant, wait.
std::vector<SegmentModel> pulse_sequence(const Nv10Model &model, double repump_mw, const PulseTimings &timings = {});

// One-cycle map as a single matrix (right-most factor applied first).
Eigen::MatrixXd cycle_propagator(const std::vector<SegmentModel> &segments);

struct SequenceSteadyState
{
    Eigen::VectorXd population;
    std::size_t cycles = 0;
    double residual = 0.0;
};

// Fixed point of the full-cycle map by iteration from p_init (default: all
// population in g0). Residual is the L1 change over one cycle. Throws
// ConvergenceError after max_cycles.
SequenceSteadyState sequence_steady_state(const std::vector<SegmentModel> &segments, double tol,
                                          const Eigen::VectorXd *p_init = nullptr, std::size_t max_cycles = 100000);

// Same fixed point from the unit-eigenvalue eigenvector of the cycle map,
// restricted to states that have at least one edge (others get zero).
Eigen::VectorXd sequence_steady_state_eigen(const std::vector<SegmentModel> &segments);

struct TracePoint
{
    double t_us = 0.0;
    std::size_t segment = 0;
    Eigen::VectorXd population;
};

// Populations sampled `per_segment` times inside each segment, starting from p.
std::vector<TracePoint> sequence_trace(const std::vector<SegmentModel> &segments, const Eigen::VectorXd &p,
                                       std::size_t per_segment);

// Two-level ms=0 / ms=+-1 exchange during the probe pulse.
struct ShelvingSettings
{
    double probe_us = 31.0;
    // RF rate for the whole population in ms=0.
    double rf_full = 1.0;
};

struct ShelvingRates
{
    double k_ex1 = 0.0;
    double k_a10 = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    bool full_shelving = false;
};

// Maps the regression tail = slope * onset + intercept onto
// slope = exp(-k T), intercept = rf_full (k_a10/k)(1 - exp(-k T)),
// k = k_ex1 + k_a10. Needs >= 3 points with distinct onsets.
ShelvingRates shelving_regression(const std::vector<double> &rf_onset, const std::vector<double> &rf_tail,
                                  const ShelvingSettings &settings = {});

struct DriftModel
{
    // MHz of Ex detuning per mW of repump power.
    double c_drift_mhz_per_mw = 60.0;
};

struct RepumpResponse
{
    double power_mw = 0.0;
    double pl = 0.0;
    double rf0 = 0.0;
    double g0_population = 0.0;
    double drift_mhz = 0.0;
};

struct RepumpReadout
{
    // PL = pl_scale * zpl flux at the end of the repump pulse.
    double pl_scale = 1.0;
    // RF0 = rf_scale * p_g0 * lineshape(drift) at the start of the probe.
    double rf_scale = 1.0;
    double linewidth_mhz = 159.0 + 1.79 * 12.89;
    PulseTimings timings;
    double tol = 1e-12;
};

using SegmentFactory = std::function<std::vector<SegmentModel>(double repump_mw)>;

std::vector<RepumpResponse> pl_rf_vs_repump(const std::vector<double> &powers_mw, const SegmentFactory &factory,
                                            const Nv10Model &model, const DriftModel &drift,
                                            const RepumpReadout &readout = {});

// Single-level saturation I_sat P / (P + P_sat).
double pl_saturation(double p, double i_sat, double p_sat);

} // namespace nvcav
