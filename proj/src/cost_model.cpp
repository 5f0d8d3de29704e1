#include "cogrid/cost_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cogrid/error.hpp"
#include "cogrid/region_store.hpp"

namespace cogrid {

void ClusterModelParams::validate() const {
  if (img_count == 0) throw ValidationError("img_count must be positive");
  if (size_big_mb <= 0 || size_small_mb <= 0 || size_gen_mb <= 0)
    throw ValidationError("file sizes must be positive");
  if (size_small_mb > size_big_mb)
    throw ValidationError("size_small_mb must not exceed size_big_mb");
  if (bandwidth_mb_s <= 0 || vdisc_r_mb_s <= 0 || vdisc_w_mb_s <= 0)
    throw ValidationError("speeds must be positive");
  if (mem_mb <= 0) throw ValidationError("mem_mb must be positive");
  if (core_count == 0) throw ValidationError("core_count must be positive");
  if (alpha < 0 || alpha > 1) throw ValidationError("alpha must be in [0,1]");
  if (beta < 0 || beta > 1) throw ValidationError("beta must be in [0,1]");
  if (region_count == 0) throw ValidationError("region_count must be positive");
  if (wt_init_s < 0 || wt_end_s < 0) throw ValidationError("init/end times must be nonnegative");
}

ClusterModelParams parse_params_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open params file: " + path.string());
  ClusterModelParams params;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("params line needs key=value: " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    try {
      if (key == "img_count")
        params.img_count = std::stoull(value);
      else if (key == "size_big_mb")
        params.size_big_mb = std::stod(value);
      else if (key == "size_small_mb")
        params.size_small_mb = std::stod(value);
      else if (key == "size_gen_mb")
        params.size_gen_mb = std::stod(value);
      else if (key == "bandwidth_mb_s")
        params.bandwidth_mb_s = std::stod(value);
      else if (key == "vdisc_r_mb_s")
        params.vdisc_r_mb_s = std::stod(value);
      else if (key == "vdisc_w_mb_s")
        params.vdisc_w_mb_s = std::stod(value);
      else if (key == "mem_mb")
        params.mem_mb = std::stod(value);
      else if (key == "core_count")
        params.core_count = std::stoull(value);
      else if (key == "alpha")
        params.alpha = std::stod(value);
      else if (key == "beta")
        params.beta = std::stod(value);
      else if (key == "region_count")
        params.region_count = std::stoull(value);
      else if (key == "wt_init_s")
        params.wt_init_s = std::stod(value);
      else if (key == "wt_end_s")
        params.wt_end_s = std::stod(value);
      else
        throw ValidationError("unknown params key: " + key);
    } catch (const std::invalid_argument&) {
      throw ValidationError("bad value for " + key + ": " + value);
    }
  }
  params.validate();
  return params;
}

double disc_r(double x_mb, const ClusterModelParams& params) {
  if (x_mb < 0) throw ValidationError("disc_r requires x >= 0");
  return x_mb / params.vdisc_r_mb_s;
}

double disc_w(double x_mb, const ClusterModelParams& params) {
  if (x_mb < 0) throw ValidationError("disc_w requires x >= 0");
  return x_mb / params.vdisc_w_mb_s;
}

double bdw(double x_mb, const ClusterModelParams& params) {
  if (x_mb < 0) throw ValidationError("bdw requires x >= 0");
  return x_mb / params.bandwidth_mb_s;
}

double avg_ants(double eta) { return 0.4 * eta + 5.0; }

uint64_t EtaBounds::lower_rounded() const {
  return static_cast<uint64_t>(std::ceil(lower));
}

uint64_t EtaBounds::upper_rounded() const {
  return static_cast<uint64_t>(std::floor(upper));
}

EtaBounds eta_bounds(const ClusterModelParams& params) {
  params.validate();
  EtaBounds bounds;
  double by_mem = static_cast<double>(params.img_count) * params.size_small_mb / params.mem_mb;
  double by_core = static_cast<double>(params.img_count) / static_cast<double>(params.core_count);
  bounds.lower = std::max(by_mem, by_core);
  bounds.upper = params.mem_mb / params.size_big_mb;
  return bounds;
}

namespace {

void check_eta(const ClusterModelParams& params, uint64_t eta, bool allow_out_of_bounds) {
  if (eta == 0) throw ValidationError("eta must be positive");
  if (allow_out_of_bounds) return;
  EtaBounds bounds = eta_bounds(params);
  if (!bounds.feasible())
    throw InfeasibleError("eta bounds are infeasible: lower " + std::to_string(bounds.lower) +
                          " > upper " + std::to_string(bounds.upper));
  double e = static_cast<double>(eta);
  if (e < bounds.lower || e > bounds.upper)
    throw ValidationError("eta " + std::to_string(eta) + " outside bounds [" +
                          std::to_string(bounds.lower) + ", " + std::to_string(bounds.upper) +
                          "]");
}

// Job count as used inside the formulas: floor(#img / eta).
double job_count(const ClusterModelParams& params, uint64_t eta) {
  return static_cast<double>(params.img_count / eta);
}

}  // namespace

TimeBreakdown wt_wall(const ClusterModelParams& params, uint64_t eta, bool allow_out_of_bounds) {
  check_eta(params, eta, allow_out_of_bounds);
  double e = static_cast<double>(eta);
  double jobs = job_count(params, eta);
  TimeBreakdown t;
  t.init_s = params.wt_init_s;
  t.map_s = disc_r(params.size_big_mb * e, params) + bdw(params.size_big_mb * e, params) +
            disc_w(params.size_big_mb * e, params) + avg_ants(e);
  t.shuffle_s = disc_r(params.size_gen_mb, params) +
                bdw(params.alpha * jobs * params.size_gen_mb, params) +
                disc_w(jobs * params.size_gen_mb, params);
  t.reduce_s =
      avg_ants(jobs) + disc_r(params.size_gen_mb, params) + disc_w(params.size_gen_mb, params);
  t.end_s = params.wt_end_s;
  t.total_s = t.init_s + t.map_s + t.shuffle_s + t.reduce_s + t.end_s;
  return t;
}

TimeBreakdown rt(const ClusterModelParams& params, uint64_t eta, bool allow_out_of_bounds) {
  check_eta(params, eta, allow_out_of_bounds);
  double e = static_cast<double>(eta);
  double jobs = job_count(params, eta);
  double img = static_cast<double>(params.img_count);
  TimeBreakdown t;
  t.map_s = disc_r(img * params.size_big_mb, params) + disc_w(img * params.size_big_mb, params) +
            bdw(params.beta * jobs * e * params.size_big_mb, params) + jobs * avg_ants(e);
  t.shuffle_s =
      params.alpha * jobs * (disc_w(params.size_gen_mb, params) + disc_r(params.size_gen_mb, params)) +
      bdw(jobs * params.size_gen_mb, params) + disc_w(jobs * params.size_gen_mb, params);
  // Matches the wall reduce component by definition; computed independently.
  t.reduce_s =
      avg_ants(jobs) + disc_r(params.size_gen_mb, params) + disc_w(params.size_gen_mb, params);
  t.total_s = t.map_s + t.shuffle_s + t.reduce_s;
  return t;
}

OptimizeResult optimize_eta(const ClusterModelParams& params, uint64_t step,
                            std::optional<uint64_t> eta_min_override,
                            std::optional<uint64_t> eta_max_override) {
  if (step == 0) throw ValidationError("step must be >= 1");
  uint64_t lo, hi;
  if (eta_min_override && eta_max_override) {
    lo = *eta_min_override;
    hi = *eta_max_override;
    if (lo == 0 || lo > hi) throw InfeasibleError("eta range is empty");
  } else {
    EtaBounds bounds = eta_bounds(params);
    if (!bounds.feasible())
      throw InfeasibleError("eta bounds are infeasible: lower " + std::to_string(bounds.lower) +
                            " > upper " + std::to_string(bounds.upper));
    lo = eta_min_override.value_or(bounds.lower_rounded());
    hi = eta_max_override.value_or(bounds.upper_rounded());
    if (lo == 0) lo = 1;
    if (lo > hi) throw InfeasibleError("rounded eta range is empty");
  }

  OptimizeResult result;
  for (uint64_t eta = lo;; eta += step) {
    if (eta > hi) {
      // keep the stated endpoint when the lattice misses it
      if (result.curve.empty() || result.curve.back().eta == hi) break;
      eta = hi;
    }
    CurvePoint point;
    point.eta = eta;
    point.wall = wt_wall(params, eta, /*allow_out_of_bounds=*/true);
    point.resource = rt(params, eta, /*allow_out_of_bounds=*/true);
    result.curve.push_back(point);
    if (eta == hi) break;
  }
  result.eta_star = result.curve.front().eta;
  double best = result.curve.front().wall.total_s;
  for (const auto& point : result.curve) {
    if (point.wall.total_s < best) {
      best = point.wall.total_s;
      result.eta_star = point.eta;
    }
  }
  return result;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "eta,wt_total,wt_map,wt_shuffle,wt_reduce,rt_total,rt_map,rt_shuffle,rt_reduce\n";
  char buf[256];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  static_cast<unsigned long long>(p.eta), p.wall.total_s, p.wall.map_s,
                  p.wall.shuffle_s, p.wall.reduce_s, p.resource.total_s, p.resource.map_s,
                  p.resource.shuffle_s, p.resource.reduce_s);
    out << buf;
  }
  write_file_atomic(path, out.str());
}

}  // namespace cogrid
