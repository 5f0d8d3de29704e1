#ifndef COGRID_COST_MODEL_HPP
#define COGRID_COST_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cogrid {

// Cluster-aggregate parameters of the wall/resource time model. Units are
// megabytes and seconds throughout.
struct ClusterModelParams {
  uint64_t img_count = 5153;     // images to average
  double size_big_mb = 20.0;     // largest input file
  double size_small_mb = 6.0;    // smallest input file
  double size_gen_mb = 21.0;     // largest generated output file
  double bandwidth_mb_s = 70.0;  // cluster network bandwidth
  double vdisc_r_mb_s = 100.0;   // local disk read speed
  double vdisc_w_mb_s = 65.0;    // local disk write speed
  double mem_mb = 4096.0;        // memory available per task slot
  uint64_t core_count = 224;     // total CPU cores in the cluster
  double alpha = 0.5;            // unbuffered fraction of map outputs
  double beta = 0.9;             // fraction of map tasks loading data via network
  uint64_t region_count = 1;     // carried for reporting; no equation uses it
  double wt_init_s = 0.0;        // constant job initialization time
  double wt_end_s = 0.0;         // constant job conclusion time

  void validate() const;
};

// Params file: `key=value` lines using the field names above
// (img_count, size_big_mb, ...). Unknown keys are rejected.
ClusterModelParams parse_params_file(const std::filesystem::path& path);

struct TimeBreakdown {
  double init_s = 0.0;
  double map_s = 0.0;
  double shuffle_s = 0.0;
  double reduce_s = 0.0;
  double end_s = 0.0;
  double total_s = 0.0;
};

// Helper functions: exact divisions, zero maps to zero.
double disc_r(double x_mb, const ClusterModelParams& params);
double disc_w(double x_mb, const ClusterModelParams& params);
double bdw(double x_mb, const ClusterModelParams& params);

// Worst-case per-chunk averaging time.
double avg_ants(double eta);

struct EtaBounds {
  double lower = 0.0;  // max(img*size_small/mem, img/core)
  double upper = 0.0;  // mem/size_big
  bool feasible() const { return lower <= upper; }
  uint64_t lower_rounded() const;  // ceil
  uint64_t upper_rounded() const;  // floor
};

EtaBounds eta_bounds(const ClusterModelParams& params);

// Wall-clock model. Throws ValidationError when eta is outside the bounds
// unless allow_out_of_bounds is set.
TimeBreakdown wt_wall(const ClusterModelParams& params, uint64_t eta,
                      bool allow_out_of_bounds = false);

// Resource-time model (summed busy time across nodes). The reduce component
// matches wt_wall's reduce component.
TimeBreakdown rt(const ClusterModelParams& params, uint64_t eta,
                 bool allow_out_of_bounds = false);

struct CurvePoint {
  uint64_t eta = 0;
  TimeBreakdown wall;
  TimeBreakdown resource;
};

struct OptimizeResult {
  uint64_t eta_star = 0;
  std::vector<CurvePoint> curve;
};

// Evaluates both models over {eta_min, eta_min+step, ...} up to eta_max
// (endpoint appended when the step lattice misses it) and returns the wall
// minimizer, ties toward the smaller eta. Range overrides replace the
// computed bounds; infeasible bounds raise InfeasibleError.
OptimizeResult optimize_eta(const ClusterModelParams& params, uint64_t step,
                            std::optional<uint64_t> eta_min_override = std::nullopt,
                            std::optional<uint64_t> eta_max_override = std::nullopt);

// CSV columns: eta,wt_total,wt_map,wt_shuffle,wt_reduce,rt_total,rt_map,rt_shuffle,rt_reduce
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);

}  // namespace cogrid

#endif  // COGRID_COST_MODEL_HPP
