/*
 * svrkit: slice-to-volume reconstruction toolkit
 *
 * Copyright 2026 The svrkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "svrkit/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "svrkit/config.hpp"
#include "svrkit/inpaint.hpp"
#include "svrkit/io.hpp"
#include "svrkit/metrics.hpp"
#include "svrkit/phantom.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace svr::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kThreadsEnv = "SVRKIT_THREADS";

// Raw string values of config-key flags; only flags actually given override the config.
struct KeyFlags {
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> opts;
  std::string config_path;

  void add(CLI::App* app, const std::vector<std::string>& names) {
    app->add_option("--config", config_path, "JSON job config (flat keys; flags win)");
    for (const auto& name : names) {
      const auto& table = JobConfig::keys();
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const JobConfig::Key& k) { return k.name == name; });
      std::string help = it->help + " [default: " + it->default_value.dump() + "]";
      opts[name] = app->add_option("--" + name, raw[name], help);
    }
  }

  JobConfig resolve() const {
    JobConfig cfg;
    if (!config_path.empty()) cfg.merge_file(config_path);
    for (const auto& [name, opt] : opts) {
      if (opt->count() == 0) continue;
      const json& current = cfg.get(name);
      const std::string& text = raw.at(name);
      try {
        if (current.is_boolean()) {
          require(text == "true" || text == "false" || text == "1" || text == "0",
                  ErrorCode::InvalidConfig, "--" + name + " expects true or false");
          cfg.set(name, text == "true" || text == "1");
        } else if (current.is_number_integer()) {
          std::size_t used = 0;
          const long long v = std::stoll(text, &used);
          require(used == text.size(), ErrorCode::InvalidConfig, "--" + name + " expects an integer");
          cfg.set(name, v);
        } else if (current.is_number_float()) {
          std::size_t used = 0;
          const double v = std::stod(text, &used);
          require(used == text.size(), ErrorCode::InvalidConfig, "--" + name + " expects a number");
          cfg.set(name, v);
        } else {
          cfg.set(name, text);
        }
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::InvalidConfig, "--" + name + ": cannot parse '" + text + "'");
      }
    }
    return cfg;
  }
};

const std::vector<std::string> kSimKeys = {"knots-min", "knots-max", "euler-max", "trans-max",
                                           "psf", "stride", "noise", "gamma-lo", "gamma-hi",
                                           "interleave", "axis", "seed", "threads", "in",
                                           "out-stack", "out-motion", "out-sidecar"};
const std::vector<std::string> kReconKeys = {"lambda", "levels", "outer-iters", "v-warmup", "cg-iters",
                                             "cg-tol", "gn-iters", "step-max", "armijo",
                                             "max-backtracks", "tikhonov-eps", "hole-eps",
                                             "basis", "threads"};

void apply_threads(const JobConfig& cfg) {
  long long threads = cfg.get("threads").get<long long>();
  if (threads <= 0)
    if (const char* env = std::getenv(kThreadsEnv)) threads = std::atoll(env);
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(int(threads));
#else
  (void)threads;
#endif
}

std::string require_path(const JobConfig& cfg, const std::string& key) {
  const std::string p = cfg.get(key).get<std::string>();
  require(!p.empty(), ErrorCode::InvalidArgument, "--" + key + " is required");
  return p;
}

json geometry_json(const StackGeometry& g) {
  return {{"K", g.K}, {"H", g.H}, {"W", g.W}, {"spacing", g.spacing},
          {"axis", axis_name(g.axis)}, {"slab", g.slab}};
}

void write_json(const fs::path& path, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dims parse_dims(const std::string& text) {
  Dims d;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  require(bool(in >> d[0] >> x1 >> d[1] >> x2 >> d[2]) && x1 == 'x' && x2 == 'x' && in.peek() == EOF,
          ErrorCode::InvalidArgument, "--dims expects NXxNYxNZ, got '" + text + "'");
  return d;
}

Volume as_volume(const Mask& mask, const Dims& dims, double spacing) {
  Volume v(dims, spacing);
  v.data = mask.cast<double>().matrix();
  return v;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const KeyFlags& flags, std::ostream& out) {
  const JobConfig cfg = flags.resolve();
  apply_threads(cfg);
  const SimConfig sim = cfg.sim();
  const fs::path in = require_path(cfg, "in");
  const fs::path stack_path = require_path(cfg, "out-stack");
  const fs::path motion_path = require_path(cfg, "out-motion");
  fs::path sidecar = cfg.get("out-sidecar").get<std::string>();
  if (sidecar.empty()) sidecar = fs::path(stack_path).replace_extension(".json");

  const io::NiftiImage img = io::read_nifti(in);
  const Acquisition acq = simulate(img.volume, sim);
  io::write_stack(stack_path, acq.stack, img.volume.spacing);
  io::write_motion(motion_path, acq.motion);

  json traj = json::array();
  for (const RigidParams& p : acq.trajectory.params)
    traj.push_back({{"euler_deg", {p.euler_deg.x(), p.euler_deg.y(), p.euler_deg.z()}},
                    {"trans", {p.trans.x(), p.trans.y(), p.trans.z()}}});
  const Eigen::Vector3d& c = acq.trajectory.center;
  json doc = {{"config", cfg.values()},
              {"seed", sim.seed},
              {"gamma", acq.gamma},
              {"rng", "mt19937_64"},
              {"euler_convention", "intrinsic ZYX, degrees"},
              {"rotation_center", {c.x(), c.y(), c.z()}},
              {"stack", geometry_json(acq.stack.geometry)},
              {"trajectory", traj}};
  write_json(sidecar, doc);
  out << "simulated " << acq.stack.geometry.K << " slices -> " << stack_path.string() << ", "
      << motion_path.string() << ", " << sidecar.string() << "\n";
}

// ------------------------------------------------------------- reconstruct

struct ReconArgs {
  std::vector<std::string> stacks, truth, out_motion;
  std::string dims, out_volume, out_svr, out_report, out_holes, out_weights;
};

void cmd_reconstruct(const KeyFlags& flags, const ReconArgs& args, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const JobConfig cfg = flags.resolve();
  apply_threads(cfg);
  const ReconConfig rc = cfg.recon();
  require(!args.stacks.empty() && args.stacks.size() <= 3, ErrorCode::InvalidArgument,
          "reconstruct expects 1 to 3 --stack files");
  require(args.truth.empty() || args.truth.size() == args.stacks.size(),
          ErrorCode::InvalidArgument, "--truth-motion must be given once per stack");
  require(args.out_motion.empty() || args.out_motion.size() == args.stacks.size(),
          ErrorCode::InvalidArgument, "--out-motion must be given once per stack");

  std::vector<SliceStack> stacks;
  double voxel_mm = 1.0;
  for (const auto& p : args.stacks) {
    io::StackFile sf = io::read_stack(p);
    voxel_mm = sf.voxel_mm;
    stacks.push_back(std::move(sf.stack));
  }
  const Dims dims = args.dims.empty() ? grid_dims_for(stacks.front().geometry) : parse_dims(args.dims);
  for (const auto& s : stacks)
    require(s.geometry.fits(dims), ErrorCode::GeometryMismatch,
            "stack " + s.geometry.describe() + " is inconsistent with grid " + dims_string(dims));
  std::vector<MotionStack> truth;
  for (const auto& p : args.truth) truth.push_back(io::read_motion(p));
  const double load_ms = elapsed_ms(t0);

  const auto t1 = std::chrono::steady_clock::now();
  ReconResult res = reconstruct(stacks, dims, rc, truth.empty() ? nullptr : &truth);
  const double solve_ms = elapsed_ms(t1);
  res.fused.spacing = voxel_mm;
  res.consensus.spacing = voxel_mm;

  const auto t2 = std::chrono::steady_clock::now();
  if (!args.out_volume.empty()) io::write_nifti(args.out_volume, res.fused);
  if (!args.out_svr.empty()) io::write_nifti(args.out_svr, res.consensus);
  if (!args.out_weights.empty()) {
    res.fused_weights.spacing = voxel_mm;
    io::write_nifti(args.out_weights, res.fused_weights);
  }
  if (!args.out_holes.empty())
    io::write_nifti(args.out_holes, as_volume(res.holes, dims, voxel_mm), "svrkit holes",
                    io::NiftiType::UInt8);
  for (std::size_t s = 0; s < args.out_motion.size(); ++s)
    io::write_motion(args.out_motion[s], res.motions[s]);

  json levels = json::array();
  for (const LevelReport& l : res.report.levels) {
    json lj = {{"level", l.level},
               {"dims", {l.dims[0], l.dims[1], l.dims[2]}},
               {"objective", l.objective},
               {"cg_residuals", l.cg_residuals},
               {"rejected_v_steps", l.rejected_v_steps},
               {"rejected_u_steps", l.rejected_u_steps},
               {"flagged_slices", l.flagged_slices}};
    if (l.epe_compensated) lj["epe_compensated"] = *l.epe_compensated;
    levels.push_back(lj);
  }
  json report = {
      {"config", cfg.values()},
      {"mode", res.report.single_stack ? "single-stack" : "multi-stack"},
      {"stacks", args.stacks.size()},
      {"dims", {dims[0], dims[1], dims[2]}},
      {"levels", levels},
      {"holes",
       {{"count", res.report.hole_voxels},
        {"total", res.report.total_voxels},
        {"fraction", double(res.report.hole_voxels) / double(res.report.total_voxels)}}}};
  if (!truth.empty()) {
    std::vector<Mask> masks;
    for (const auto& f : stacks) masks.push_back(foreground_mask(f));
    report["epe"] = pooled_epe(res.motions, truth, false, masks);
    report["epe_compensated"] = pooled_epe(res.motions, truth, true, masks);
    report["epe_compensated_all_pixels"] = pooled_epe(res.motions, truth, true);
    report["foreground_rel"] = kForegroundRel;
  }
  report["timings_ms"] = {{"load", load_ms}, {"solve", solve_ms}, {"write", elapsed_ms(t2)}};
  if (!args.out_report.empty()) write_json(args.out_report, report);

  out << "reconstructed " << args.stacks.size() << " stack(s) on " << dims_string(dims)
      << (res.report.single_stack ? " (single-stack mode)" : "") << "; holes "
      << res.report.hole_voxels << "/" << res.report.total_voxels;
  if (!truth.empty()) out << "; compensated EPE " << report["epe_compensated"].get<double>() << " voxels";
  out << "\n";
}

// ------------------------------------------------------------------- splat

struct SplatArgs {
  std::string stack, motion, out_volume, out_weights, out_holes;
  double hole_eps = kDefaultHoleEps;
};

void cmd_splat(const SplatArgs& a, std::ostream& out) {
  const io::StackFile sf = io::read_stack(a.stack);
  const MotionStack m = a.motion.empty() ? MotionStack(sf.stack.geometry) : io::read_motion(a.motion);
  require(m.geometry == sf.stack.geometry, ErrorCode::GeometryMismatch,
          "motion " + m.geometry.describe() + " does not match stack " + sf.stack.geometry.describe());
  require(a.hole_eps > 0, ErrorCode::InvalidConfig, "--hole-eps must be > 0");
  const Dims dims = grid_dims_for(sf.stack.geometry);
  const SplatVolume splat = splat_push(sf.stack, m, Psf::boxcar(sf.stack.geometry.slab), dims);
  auto [vol, holes] = normalize_splat(splat, hole_threshold(splat, a.hole_eps));
  vol.spacing = sf.voxel_mm;
  require(!a.out_volume.empty(), ErrorCode::InvalidArgument, "--out-volume is required");
  io::write_nifti(a.out_volume, vol);
  if (!a.out_weights.empty()) {
    Volume w = splat.weights;
    w.spacing = sf.voxel_mm;
    io::write_nifti(a.out_weights, w);
  }
  if (!a.out_holes.empty())
    io::write_nifti(a.out_holes, as_volume(holes, dims, sf.voxel_mm), "svrkit holes",
                    io::NiftiType::UInt8);
  out << "splatted " << sf.stack.geometry.K << " slices onto " << dims_string(dims) << "; holes "
      << holes.count() << "/" << holes.size() << "\n";
}

// ----------------------------------------------------------------- inpaint

struct InpaintArgs {
  std::string in, mask, weights, out;
  int passes = 8;
  double hole_eps = kDefaultHoleEps;
};

void cmd_inpaint(const InpaintArgs& a, std::ostream& out) {
  require(!a.in.empty() && !a.out.empty(), ErrorCode::InvalidArgument, "--in and --out are required");
  const io::NiftiImage img = io::read_nifti(a.in);
  Mask holes;
  if (!a.mask.empty()) {
    const io::NiftiImage m = io::read_nifti(a.mask);
    require((m.volume.dims == img.volume.dims).all(), ErrorCode::GeometryMismatch,
            "--mask dims differ from the volume");
    holes = m.volume.data.array() != 0.0;
  } else if (!a.weights.empty()) {
    const io::NiftiImage w = io::read_nifti(a.weights);
    require((w.volume.dims == img.volume.dims).all(), ErrorCode::GeometryMismatch,
            "--weights dims differ from the volume");
    const double scale = w.volume.data.maxCoeff();
    holes = holes_from_weights(w.volume, a.hole_eps * (scale > 0 ? scale : 1.0));
  } else {
    holes = img.volume.data.array() == 0.0;
  }
  const Volume filled = fill_holes(img.volume, holes, a.passes);
  io::write_nifti(a.out, filled);
  out << "filled " << holes.count() << " hole voxel(s) -> " << a.out << "\n";
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string pred_motion, truth_motion, pred_volume, truth_volume, stack;
  double foreground_rel = kForegroundRel;
  bool compensate = false;
  double peak = 0.0;
  double spacing = 0.0;
};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  MetricReport rep;
  double mm = a.spacing;
  std::optional<Volume> truth_vol;
  if (!a.truth_volume.empty()) {
    truth_vol = io::read_nifti(a.truth_volume).volume;
    if (mm <= 0) mm = truth_vol->spacing;
  }
  if (mm <= 0) mm = 1.0;

  if (!a.pred_motion.empty() || !a.truth_motion.empty()) {
    require(!a.pred_motion.empty() && !a.truth_motion.empty(), ErrorCode::InvalidArgument,
            "motion metrics need both --pred-motion and --truth-motion");
    const MotionStack u = io::read_motion(a.pred_motion);
    const MotionStack v = io::read_motion(a.truth_motion);
    require(u.geometry == v.geometry, ErrorCode::GeometryMismatch,
            "predicted motion " + u.geometry.describe() + " vs truth " + v.geometry.describe());
    Mask mask;
    if (!a.stack.empty()) {
      const io::StackFile sf = io::read_stack(a.stack);
      require(sf.stack.geometry == u.geometry, ErrorCode::GeometryMismatch,
              "--stack " + sf.stack.geometry.describe() + " vs motion " + u.geometry.describe());
      mask = foreground_mask(sf.stack, a.foreground_rel);
    }
    const MotionStack aligned =
        a.compensate ? apply_rigid(v, compensated_loss(u, v, mask).rigid) : v;
    rep.mse = motion_mse(u, aligned, mask) * mm * mm;
    rep.epe = epe(u, v, mask, false) * mm;
    rep.epe_compensated = epe(u, v, mask, true) * mm;
    rep.ape = ape(u, aligned) * mm;
    if (truth_vol) {
      const Psf psf = Psf::boxcar(u.geometry.slab);
      rep.psnr_slices = psnr(slice_pull(*truth_vol, u, psf), slice_pull(*truth_vol, v, psf),
                             Mask(), a.peak);
    }
  }
  if (!a.pred_volume.empty()) {
    require(truth_vol.has_value(), ErrorCode::InvalidArgument,
            "--pred-volume needs --truth-volume");
    rep.psnr_volume = psnr(io::read_nifti(a.pred_volume).volume, *truth_vol, Mask(), a.peak);
  }
  const json doc = {{"mse", optional_json(rep.mse)},
                    {"epe", optional_json(rep.epe)},
                    {"epe_compensated", optional_json(rep.epe_compensated)},
                    {"ape", optional_json(rep.ape)},
                    {"psnr_slices", optional_json(rep.psnr_slices)},
                    {"psnr_volume", optional_json(rep.psnr_volume)}};
  out << doc.dump() << "\n";
}

// ----------------------------------------------------------------- phantom

struct PhantomArgs {
  std::string dims = "64x64x64", out;
  int blobs = 32;
  std::uint64_t seed = 0;
  double voxel_mm = 1.0;
};

void cmd_phantom(const PhantomArgs& a, std::ostream& out) {
  require(a.voxel_mm > 0, ErrorCode::InvalidArgument, "--voxel-mm must be > 0");
  Volume vol = blob_phantom(parse_dims(a.dims), a.blobs, a.seed);
  vol.spacing = a.voxel_mm;
  io::write_nifti(a.out, vol, "svrkit blob phantom");
  out << "wrote " << dims_string(vol.dims) << " phantom -> " << a.out << "\n";
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"svrkit: slice-to-volume reconstruction toolkit"};
  app.require_subcommand(1);
  app.footer(std::string("Environment: ") + kThreadsEnv +
             " sets the worker thread count when --threads is not given.");

  KeyFlags sim_flags, recon_flags;
  auto* sim = app.add_subcommand("simulate", "slice a volume into a motion-corrupted stack");
  sim_flags.add(sim, kSimKeys);

  ReconArgs recon_args;
  auto* rec = app.add_subcommand("reconstruct", "estimate slice motion and reconstruct a volume");
  recon_flags.add(rec, kReconKeys);
  rec->add_option("--stack", recon_args.stacks, "input slice stack (.nii), 1 to 3 times")->required();
  rec->add_option("--truth-motion", recon_args.truth, "ground-truth motion per stack (.svrm)");
  rec->add_option("--dims", recon_args.dims, "reconstruction grid NXxNYxNZ (default: from first stack)");
  rec->add_option("--out-volume", recon_args.out_volume, "fused volume (.nii)");
  rec->add_option("--out-svr", recon_args.out_svr, "mean of the per-stack solved volumes (.nii)");
  rec->add_option("--out-motion", recon_args.out_motion, "estimated motion per stack (.svrm)");
  rec->add_option("--out-report", recon_args.out_report, "JSON report");
  rec->add_option("--out-holes", recon_args.out_holes, "hole mask (.nii, uint8)");
  rec->add_option("--out-weights", recon_args.out_weights, "accumulated splat weights (.nii)");

  SplatArgs splat_args;
  auto* spl = app.add_subcommand("splat", "splat a stack into a volume with given motion");
  spl->add_option("--stack", splat_args.stack, "slice stack (.nii)")->required();
  spl->add_option("--motion", splat_args.motion, "motion (.svrm); zero motion when omitted");
  spl->add_option("--out-volume", splat_args.out_volume, "normalized splat (.nii)")->required();
  spl->add_option("--out-weights", splat_args.out_weights, "splat weights (.nii)");
  spl->add_option("--out-holes", splat_args.out_holes, "hole mask (.nii, uint8)");
  spl->add_option("--hole-eps", splat_args.hole_eps, "hole threshold relative to the largest weight");

  InpaintArgs inp_args;
  auto* inp = app.add_subcommand("inpaint", "fill holes in a reconstruction");
  inp->add_option("--in", inp_args.in, "volume (.nii)")->required();
  inp->add_option("--mask", inp_args.mask, "hole mask (.nii, nonzero = hole)");
  inp->add_option("--weights", inp_args.weights, "splat weights (.nii); holes below --hole-eps");
  inp->add_option("--hole-eps", inp_args.hole_eps, "hole threshold relative to the largest weight");
  inp->add_option("--passes", inp_args.passes, "fill passes (>= 1)");
  inp->add_option("--out", inp_args.out, "filled volume (.nii)")->required();
  inp->footer("Without --mask or --weights, voxels equal to 0 are treated as holes.");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "print motion and intensity metrics as JSON");
  ev->add_option("--pred-motion", eval_args.pred_motion, "predicted motion (.svrm)");
  ev->add_option("--truth-motion", eval_args.truth_motion, "true motion (.svrm)");
  ev->add_option("--pred-volume", eval_args.pred_volume, "reconstructed volume (.nii)");
  ev->add_option("--truth-volume", eval_args.truth_volume, "true volume (.nii)");
  ev->add_option("--stack", eval_args.stack,
                 "slice stack (.nii); restricts motion metrics to its foreground pixels");
  ev->add_option("--foreground-rel", eval_args.foreground_rel,
                 "foreground threshold relative to the stack's largest magnitude");
  ev->add_flag("--compensate", eval_args.compensate, "rigidly compensate mse and ape as well");
  ev->add_option("--peak", eval_args.peak, "PSNR peak (default: reference maximum)");
  ev->add_option("--spacing", eval_args.spacing,
                 "mm per voxel for motion metrics (default: truth volume, else 1)");

  PhantomArgs ph_args;
  auto* ph = app.add_subcommand("phantom", "write a smooth random-blob test volume");
  ph->add_option("--dims", ph_args.dims, "grid NXxNYxNZ");
  ph->add_option("--blobs", ph_args.blobs, "number of Gaussian blobs");
  ph->add_option("--seed", ph_args.seed, "random seed");
  ph->add_option("--voxel-mm", ph_args.voxel_mm, "voxel size written to the header");
  ph->add_option("--out", ph_args.out, "output volume (.nii)")->required();

  auto* fmt = app.add_subcommand("formats", "print the file format reference");

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "invalid_argument", e.what());
    return 2;
  }

  try {
    if (*sim) cmd_simulate(sim_flags, out);
    else if (*rec) cmd_reconstruct(recon_flags, recon_args, out);
    else if (*spl) cmd_splat(splat_args, out);
    else if (*inp) cmd_inpaint(inp_args, out);
    else if (*ev) cmd_evaluate(eval_args, out);
    else if (*ph) cmd_phantom(ph_args, out);
    else if (*fmt) out << io::format_reference();
  } catch (const Error& e) {
    print_error(err, to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace svr::cli
