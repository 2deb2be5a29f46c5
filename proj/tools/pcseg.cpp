// Batch command-line front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 decomposition stopped at max_iters without converging (outputs still written).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pcseg/pcseg.hpp"

namespace fs = std::filesystem;
using namespace pcseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNotConverged = 3;

PipelineConfig load_config(const std::string &path) {
  return path.empty() ? parse_config_text("") : parse_config(path);
}

int cmd_synth(const std::string &config, const fs::path &out) {
  const PipelineConfig cfg = load_config(config);
  const SynthDataset ds = render(cfg.synth, cfg.optics);
  write_dataset(ds, cfg.optics, out, cfg.bit_depth);
  std::cerr << "synth: wrote " << ds.sequence.size() << " frames to " << out << '\n';
  return kExitOk;
}

int cmd_decompose(const std::string &config, const fs::path &in, const fs::path &out, int threads) {
  const PipelineConfig cfg = load_config(config);
  const ImageSequence seq = load_sequence(in, cfg.pattern);
  require_decomposable(seq);
  const Decomposition d = decompose(stack(seq), cfg.alm, threads);
  save_sequence(unstack(d.background), out / "background", cfg.bit_depth);
  save_sequence(unstack(d.foreground), out / "foreground", cfg.bit_depth);
  write_decomposition_csv(out / "diag.csv", d);
  std::cerr << "decompose: " << d.iterations << " iterations, residual " << d.residual_history.back()
            << (d.converged ? ", converged\n" : ", NOT converged\n");
  return d.converged ? kExitOk : kExitNotConverged;
}

int cmd_restore(const std::string &config, const fs::path &in, const fs::path &out, int threads) {
  const PipelineConfig cfg = load_config(config);
  const ImageSequence fg(load_sequence(in, cfg.pattern));
  const auto frames = segment_foreground(fg, cfg, threads);
  write_segmentation(frames, cfg, out);
  std::cerr << "restore: " << frames.size() << " frames x " << cfg.optics.m_phases << " phases\n";
  return kExitOk;
}

int cmd_segment(const std::string &config, const fs::path &in, const fs::path &out, int threads) {
  const PipelineConfig cfg = load_config(config);
  const ImageSequence seq = load_sequence(in, cfg.pattern);
  const PipelineOutput o = run_pipeline(seq, cfg, out, threads);
  std::size_t cells = 0;
  for (const auto &f : o.frames) cells += static_cast<std::size_t>(f.result.cell_count);
  std::cerr << "segment: " << o.frames.size() << " frames, " << cells << " components, decomposition "
            << (o.decomposition.converged ? "converged" : "NOT converged") << " in " << o.decomposition.iterations
            << " iterations\n";
  return o.decomposition.converged ? kExitOk : kExitNotConverged;
}

int cmd_eval(const fs::path &masks, const fs::path &truth, const fs::path &out, const std::string &pattern) {
  const EvalReport r = evaluate(load_masks(masks, pattern), load_masks(truth, pattern));
  write_eval_csv(out, r);
  std::printf("mean ACC %.6f over %zu frames\n", r.mean_acc, r.acc.size());
  return kExitOk;
}

int cmd_bench(const std::string &config, const fs::path &in, const fs::path &out, int reps, int threads) {
  const PipelineConfig cfg = load_config(config);
  const ImageSequence seq = load_sequence(in, cfg.pattern);
  const BenchReport r = bench(seq, cfg, reps, threads);
  write_bench_csv(out, r);
  std::printf("median seconds: decompose %.4f  restore %.4f  segment %.4f\n", BenchReport::median(r.decompose),
              BenchReport::median(r.restore), BenchReport::median(r.segment));
  return kExitOk;
}

Frame kernel_image(const Kernel &k) {
  const auto [mn, mx] = std::minmax_element(k.taps.begin(), k.taps.end());
  const double span = *mx - *mn;
  std::vector<double> px(k.taps.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = span > 0 ? (k.taps[i] - *mn) / span : 0.5;
  return Frame(k.size, k.size, std::move(px));
}

int cmd_dump_bank(const std::string &config, const fs::path &out, int inverse_size) {
  const PipelineConfig cfg = load_config(config);
  const KernelBank bank = psf_bank(cfg.optics);
  fs::create_directories(out);
  std::ofstream csv(out / "taps.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write " + (out / "taps.csv").string());
  csv.precision(12);
  csv << "kind,phase_index,theta,dx,dy,value\n";
  for (std::size_t m = 0; m < bank.size(); ++m) {
    const Kernel &k = bank.kernels[m];
    const Kernel inv = inverse_kernel(k, std::max(inverse_size, k.size | 1), cfg.optics.inv_reg);
    save_frame(kernel_image(k), out / ("psf_" + std::to_string(m + 1) + ".pgm"), 8);
    save_frame(kernel_image(inv), out / ("idp_" + std::to_string(m + 1) + ".pgm"), 8);
    for (const auto *kk : {&k, &inv}) {
      const int h = kk->half();
      for (int dy = -h; dy <= h; ++dy)
        for (int dx = -h; dx <= h; ++dx)
          csv << (kk == &k ? "psf" : "idp") << ',' << (m + 1) << ',' << bank.phases[m] << ',' << dx << ',' << dy
              << ',' << kk->at(dx, dy) << '\n';
    }
  }
  std::cerr << "dump-bank: wrote " << bank.size() << " kernels to " << out << '\n';
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Phase contrast cell segmentation: low-rank + fused-lasso background subtraction "
               "followed by inverse diffraction pattern filtering."};
  app.footer(config_reference());
  app.require_subcommand(0, 1);

  std::string config, in, out, masks, truth, pattern = "*.pgm";
  int threads = 1, reps = 3, inverse_size = 63;

  auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config, "configuration file (key = value)")->check(CLI::ExistingFile);
    sub->footer(config_reference());
  };
  auto add_threads = [&](CLI::App *sub) {
    sub->add_option("--threads", threads, "worker threads for per-frame stages")->check(CLI::PositiveNumber);
  };

  auto *synth = app.add_subcommand("synth", "generate a synthetic sequence with ground truth");
  add_config(synth);
  synth->add_option("--out", out, "output directory")->required();

  auto *dec = app.add_subcommand("decompose", "split a sequence into low-rank background and sparse foreground");
  add_config(dec);
  add_threads(dec);
  dec->add_option("--in", in, "input frame directory")->required();
  dec->add_option("--out", out, "output directory")->required();

  auto *res = app.add_subcommand("restore", "apply the inverse diffraction bank to foreground frames and segment them");
  add_config(res);
  add_threads(res);
  res->add_option("--in", in, "foreground frame directory")->required();
  res->add_option("--out", out, "output directory")->required();

  auto *seg = app.add_subcommand("segment", "full pipeline: decompose, restore, binarize, label");
  add_config(seg);
  add_threads(seg);
  seg->add_option("--in", in, "input frame directory")->required();
  seg->add_option("--out", out, "output directory")->required();

  auto *ev = app.add_subcommand("eval", "pixel accuracy of masks against ground truth");
  ev->add_option("--masks", masks, "predicted mask directory")->required();
  ev->add_option("--truth", truth, "ground-truth mask directory")->required();
  ev->add_option("--out", out, "report CSV")->required();
  ev->add_option("--pattern", pattern, "filename glob");

  auto *be = app.add_subcommand("bench", "time each pipeline stage");
  add_config(be);
  add_threads(be);
  be->add_option("--in", in, "input frame directory")->required();
  be->add_option("--out", out, "timing CSV")->required();
  be->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);

  auto *db = app.add_subcommand("dump-bank", "write the PSF and inverse kernels as images and a CSV of taps");
  add_config(db);
  db->add_option("--out", out, "output directory")->required();
  db->add_option("--size", inverse_size, "odd support of the spatial inverse kernels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(config, out);
    if (dec->parsed()) return cmd_decompose(config, in, out, threads);
    if (res->parsed()) return cmd_restore(config, in, out, threads);
    if (seg->parsed()) return cmd_segment(config, in, out, threads);
    if (ev->parsed()) return cmd_eval(masks, truth, out, pattern);
    if (be->parsed()) return cmd_bench(config, in, out, reps, threads);
    if (db->parsed()) return cmd_dump_bank(config, out, inverse_size);
  } catch (const ConfigError &e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError &e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
