// Road-segmentation toolbox: data generation, contour maps, training,
// stepwise ablation, evaluation, and road-frequency reports in one binary.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "sfcn/checkpoint.hpp"
#include "sfcn/contour.hpp"
#include "sfcn/homography.hpp"
#include "sfcn/image_io.hpp"
#include "sfcn/kernels.hpp"
#include "sfcn/locprior.hpp"
#include "sfcn/metrics.hpp"
#include "sfcn/net.hpp"
#include "sfcn/synth.hpp"
#include "sfcn/trainer.hpp"

namespace fs = std::filesystem;
using namespace sfcn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 1;

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::string index_file(const char* prefix, std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu.%s", prefix, i, ext);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- gen-data -------------------------------------------------------------

struct GenArgs {
  std::string out;
  std::size_t count = 10;
  std::size_t first = 0;
  std::uint64_t seed = 7;
  std::size_t size = 64;
  double noise = 0.05;
  int occluders = 3;
  int shadows = 2;
};

int cmd_gen_data(const GenArgs& a) {
  SceneParams p;
  p.h = p.w = a.size;
  p.seed = a.seed;
  p.noise_amp = a.noise;
  p.occluder_hi = a.occluders;
  p.shadow_hi = a.shadows;
  const fs::path manifest = generate_dataset(p, a.count, a.out, a.first);
  std::cout << manifest.string() << "\n";
  return 0;
}

// ---- contour ---------------------------------------------------------------

struct ContourArgs {
  std::string manifest;
  std::string external;  // directory of precomputed maps; empty = detect
};

int cmd_contour(const ContourArgs& a) {
  const fs::path mpath = a.manifest;
  Dataset d = load_dataset(mpath);
  const fs::path dir = mpath.parent_path();

  std::vector<std::string> contour_names(d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const std::string name = index_file("contour", i, "pgm");
    ContourMap c = a.external.empty()
                       ? detect_contour(d.samples[i].image)
                       : load_contour(fs::path(a.external) / name);
    const Shape& s = d.samples[i].image.shape();
    if (c.h != s.h || c.w != s.w)
      throw IoError("contour extent mismatch at sample " + std::to_string(i));
    save_contour(dir / name, c);
    contour_names[i] = name;
  }

  // rewrite the manifest with the contour column appended; comment lines kept
  std::vector<std::string> header;
  {
    std::ifstream in(mpath);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] == '#') header.push_back(line);
  }
  std::ofstream out(mpath);
  if (!out) throw IoError("cannot rewrite " + mpath.string());
  for (const std::string& h : header) out << h << "\n";
  for (std::size_t i = 0; i < d.samples.size(); ++i)
    out << fs::path(d.image_paths[i]).filename().string() << '\t'
        << fs::path(d.mask_paths[i]).filename().string() << '\t' << d.labels[i] << '\t'
        << contour_names[i] << '\n';
  std::cout << mpath.string() << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string manifest, val_manifest, out;
  std::string variant = "s-fcn-loc";
  std::string attach = "pool4";
  std::string loss = "mean";
  std::size_t iters = 2000;
  std::size_t batch = 4;
  std::size_t width = 8;
  double lr = 1e-2;
  double momentum = 0.9;
  double decay = 5e-4;
  double dropout = 0.5;
  double tau = 0.5;
  std::size_t eval_interval = 0;
  std::size_t log_interval = 10;
  std::uint64_t seed = 1;
};

ArchConfig arch_from(const TrainArgs& a, std::size_t input) {
  ArchConfig arch;
  arch.variant = variant_from_string(a.variant);
  arch.attach = attach_from_string(a.attach);
  arch.input = input;
  arch.width = a.width;
  arch.dropout = a.dropout;
  arch.seed = a.seed;
  arch.validate();
  return arch;
}

TrainConfig train_cfg_from(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.iterations = a.iters;
  cfg.batch = a.batch;
  cfg.opt.lr_weight = a.lr;
  cfg.opt.lr_bias = 2.0 * a.lr;
  cfg.opt.momentum = a.momentum;
  cfg.opt.decay = a.decay;
  cfg.reduction =
      a.loss == "sum" ? LossConfig::Reduction::Sum : LossConfig::Reduction::Mean;
  cfg.eval_interval = a.eval_interval;
  cfg.log_interval = a.log_interval;
  cfg.tau = a.tau;
  cfg.seed = a.seed;
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  Dataset data = load_dataset(a.manifest);
  Dataset val;
  const bool have_val = !a.val_manifest.empty();
  if (have_val) val = load_dataset(a.val_manifest);

  const ArchConfig arch = arch_from(a, data.samples[0].image.shape().h);
  ParameterStore store;
  Network net(arch, store);
  net.init_params();

  const TrainConfig cfg = train_cfg_from(a);
  std::cerr << "train: " << a.variant << " iters=" << a.iters << " seed=" << a.seed
            << " samples=" << data.samples.size() << "\n";
  TrainResult res = train(net, store, data, cfg, have_val ? &val : nullptr);
  std::cerr << "train: final loss " << res.final_loss << " after " << res.total_seconds
            << " s\n";

  fs::create_directories(a.out);
  write_loss_csv(fs::path(a.out) / "loss.csv", res.curve);
  save_checkpoint(fs::path(a.out) / "model.ckpt", store, arch);
  std::cout << (fs::path(a.out) / "model.ckpt").string() << "\n";
  return 0;
}

// ---- ablate -----------------------------------------------------------------

struct AblateArgs {
  TrainArgs base;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool attach_compare = false;
};

struct RunRow {
  std::string variant;
  std::uint64_t seed;
  MetricsReport rep;
  std::vector<CurvePoint> curve;
  double total_seconds = 0;
};

RunRow run_one(const TrainArgs& base, const std::string& variant, std::uint64_t seed,
               const Dataset& data, const Dataset& val) {
  TrainArgs a = base;
  a.variant = variant;
  a.seed = seed;
  const ArchConfig arch = arch_from(a, data.samples[0].image.shape().h);
  ParameterStore store;
  Network net(arch, store);
  net.init_params();
  TrainResult res = train(net, store, data, train_cfg_from(a));
  RunRow row{variant, seed, evaluate_dataset(net, val, a.tau), std::move(res.curve),
             res.total_seconds};
  std::cerr << "ablate: " << variant << " seed=" << seed << " F1=" << row.rep.f_measure
            << " (" << row.total_seconds << " s)\n";
  return row;
}

void write_summary_csv(const fs::path& path, const std::vector<RunRow>& rows,
                       const std::vector<std::string>& variants) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "variant,seed,f1,accuracy,precision,recall\n";
  for (const RunRow& r : rows)
    out << r.variant << ',' << r.seed << ',' << fmt(r.rep.f_measure) << ','
        << fmt(r.rep.accuracy) << ',' << fmt(r.rep.precision) << ','
        << fmt(r.rep.recall) << '\n';
  for (const std::string& v : variants) {
    std::vector<double> f1, acc, pre, rec;
    for (const RunRow& r : rows)
      if (r.variant == v) {
        f1.push_back(r.rep.f_measure);
        acc.push_back(r.rep.accuracy);
        pre.push_back(r.rep.precision);
        rec.push_back(r.rep.recall);
      }
    out << v << ",median," << fmt(median(f1)) << ',' << fmt(median(acc)) << ','
        << fmt(median(pre)) << ',' << fmt(median(rec)) << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

int cmd_ablate(const AblateArgs& a) {
  Dataset data = load_dataset(a.base.manifest);
  if (a.base.val_manifest.empty())
    throw std::runtime_error("ablate: --val-manifest is required");
  Dataset val = load_dataset(a.base.val_manifest);
  fs::create_directories(a.base.out);
  const fs::path out = a.base.out;

  if (a.attach_compare) {
    // s-fcn-loc with the location prior attached at each tap, one row apiece
    std::ofstream csv(out / "attach_compare.csv");
    if (!csv) throw IoError("cannot write attach_compare.csv");
    csv << "attach,f1,accuracy,precision,recall\n";
    for (const std::string& att : {std::string("pool4"), std::string("conv7")}) {
      TrainArgs t = a.base;
      t.variant = "s-fcn-loc";
      t.attach = att;
      RunRow r = run_one(t, t.variant, a.seeds[0], data, val);
      write_loss_csv(out / ("loss_attach_" + att + ".csv"), r.curve);
      csv << att << ',' << fmt(r.rep.f_measure) << ',' << fmt(r.rep.accuracy) << ','
          << fmt(r.rep.precision) << ',' << fmt(r.rep.recall) << '\n';
    }
    std::cout << (out / "attach_compare.csv").string() << "\n";
    return 0;
  }

  const std::vector<std::string> variants{"fcn", "s-fcn", "s-fcn-loc"};
  std::vector<RunRow> rows;
  for (std::uint64_t seed : a.seeds)
    for (const std::string& v : variants) {
      rows.push_back(run_one(a.base, v, seed, data, val));
      write_loss_csv(out / ("loss_" + v + "_seed" + std::to_string(seed) + ".csv"),
                     rows.back().curve);
    }
  write_summary_csv(out / "summary.csv", rows, variants);

  // convergence vs the fcn baseline: target = baseline's final logged loss
  std::ofstream conv(out / "convergence.csv");
  if (!conv) throw IoError("cannot write convergence.csv");
  conv << "seed,variant,target,reached,iteration,seconds,seconds_ratio_vs_fcn\n";
  for (std::uint64_t seed : a.seeds) {
    const RunRow* base = nullptr;
    for (const RunRow& r : rows)
      if (r.variant == "fcn" && r.seed == seed) base = &r;
    const double target = base->curve.back().loss;
    for (const std::string& v : variants) {
      for (const RunRow& r : rows)
        if (r.variant == v && r.seed == seed) {
          const ConvergenceReport cr = compare_convergence(r.curve, base->curve, target);
          conv << seed << ',' << v << ',' << fmt(target) << ','
               << (cr.a_reached ? "yes" : "no") << ','
               << (cr.a_reached ? std::to_string(cr.a_iteration) : std::string()) << ','
               << (cr.a_reached ? fmt(cr.a_seconds) : std::string()) << ','
               << (cr.a_reached && cr.b_reached ? fmt(cr.seconds_ratio) : std::string())
               << '\n';
        }
    }
  }
  std::cout << (out / "summary.csv").string() << "\n";
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, manifest, out;
  double tau = 0.5;
  double gamma = 1.0;
  std::vector<double> bev;  // 8 floats: 4 perspective points mapped to BEV corners
  std::size_t bev_h = 800, bev_w = 400;
};

int cmd_eval(const EvalArgs& a) {
  ParameterStore store;
  const ArchConfig arch = load_checkpoint(a.checkpoint, store);
  Network net(arch, store);
  Dataset data = load_dataset(a.manifest);

  // pooled per-pixel scores and labels across the whole set
  std::vector<double> scores;
  std::vector<int> gt;
  const bool twin = arch.siamesed();
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    Tensor aux;
    if (twin) aux = stream_input(data, i);
    const Tensor logits = net.forward(data.samples[i].image, twin ? &aux : nullptr,
                                      false, 0);
    const std::vector<double> prob = road_probability(logits);
    scores.insert(scores.end(), prob.begin(), prob.end());
    gt.insert(gt.end(), data.samples[i].mask.begin(), data.samples[i].mask.end());
  }

  const MetricsReport at_tau = metrics(confusion(scores, gt, a.tau), a.gamma);
  const MaxFResult mf = max_f(scores, gt, a.gamma, default_sweep());

  fs::create_directories(a.out);
  {
    std::ofstream pr(fs::path(a.out) / "pr_curve.csv");
    pr << "tau,precision,recall,f\n";
    for (const PrPoint& p : mf.curve)
      pr << fmt(p.tau) << ',' << fmt(p.precision) << ',' << fmt(p.recall) << ','
         << fmt(p.f) << '\n';
  }

  std::map<std::string, double> report{
      {"tau", a.tau},           {"gamma", a.gamma},
      {"precision", at_tau.precision}, {"recall", at_tau.recall},
      {"accuracy", at_tau.accuracy},   {"f_measure", at_tau.f_measure},
      {"fpr", at_tau.fpr},      {"fnr", at_tau.fnr},
      {"max_f", mf.f_star},     {"max_f_tau", mf.tau_star}};

  if (!a.bev.empty()) {
    if (a.bev.size() != 8)
      throw std::runtime_error("eval: --bev needs 8 floats (x1 y1 ... x4 y4)");
    // all samples share one extent; evaluate each image in BEV and pool
    const std::array<Pt, 4> src{Pt{a.bev[0], a.bev[1]}, Pt{a.bev[2], a.bev[3]},
                                Pt{a.bev[4], a.bev[5]}, Pt{a.bev[6], a.bev[7]}};
    const double W = double(a.bev_w) - 1.0, H = double(a.bev_h) - 1.0;
    const std::array<Pt, 4> dst{Pt{0, 0}, Pt{W, 0}, Pt{W, H}, Pt{0, H}};
    const Homography Hm = homography_from_points(src, dst);
    const Shape& s = data.samples[0].image.shape();
    std::vector<double> bev_scores;
    std::vector<int> bev_gt;
    const std::size_t plane = s.h * s.w;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      std::vector<double> ps(scores.begin() + i * plane,
                             scores.begin() + (i + 1) * plane);
      WarpedPlane wp = warp_scores_bev(ps, s.h, s.w, Hm, a.bev_h, a.bev_w);
      std::vector<int> wm =
          warp_mask_bev(data.samples[i].mask, s.h, s.w, Hm, a.bev_h, a.bev_w);
      for (std::size_t k = 0; k < wp.v.size(); ++k)
        if (!wp.valid[k]) wm[k] = kVoidLabel;
      bev_scores.insert(bev_scores.end(), wp.v.begin(), wp.v.end());
      bev_gt.insert(bev_gt.end(), wm.begin(), wm.end());
    }
    const MetricsReport bev_at = metrics(confusion(bev_scores, bev_gt, a.tau), a.gamma);
    const MaxFResult bev_mf = max_f(bev_scores, bev_gt, a.gamma, default_sweep());
    report["bev_precision"] = bev_at.precision;
    report["bev_recall"] = bev_at.recall;
    report["bev_accuracy"] = bev_at.accuracy;
    report["bev_f_measure"] = bev_at.f_measure;
    report["bev_max_f"] = bev_mf.f_star;
    report["bev_max_f_tau"] = bev_mf.tau_star;
  }

  {
    std::ofstream txt(fs::path(a.out) / "metrics.txt");
    for (const auto& [k, v] : report) txt << k << "=" << fmt(v) << "\n";
    std::ofstream csv(fs::path(a.out) / "metrics.csv");
    bool first = true;
    for (const auto& [k, v] : report) csv << (first ? "" : ",") << k, first = false;
    csv << "\n";
    first = true;
    for (const auto& [k, v] : report) csv << (first ? "" : ",") << fmt(v), first = false;
    csv << "\n";
  }
  std::cout << (fs::path(a.out) / "metrics.txt").string() << "\n";
  return 0;
}

// ---- freq-map ----------------------------------------------------------------

struct FreqArgs {
  std::string manifest, out;
};

int cmd_freq_map(const FreqArgs& a) {
  Dataset data = load_dataset(a.manifest);
  const Shape& s = data.samples[0].image.shape();
  std::vector<std::vector<int>> masks;
  for (const Sample& smp : data.samples) {
    std::vector<int> m = smp.mask;
    for (int& v : m)
      if (v == kVoidLabel) v = 0;  // void counts as non-road in the frequency map
    masks.push_back(std::move(m));
  }
  const FrequencyMap f = road_frequency(masks, s.h, s.w);
  fs::create_directories(a.out);
  save_frequency_pgm(fs::path(a.out) / "freq.pgm", f);
  save_frequency_csv(fs::path(a.out) / "freq.csv", f);
  std::cout << (fs::path(a.out) / "freq.pgm").string() << "\n";
  return 0;
}

// Flat key=value config: values apply to any option of the parsed subcommand
// that was not set on the command line (flags win). Unknown keys are usage
// errors. CLI11 only honors set_config on the root app, so this is manual.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ConfigError(path + ":" + std::to_string(lineno) +
                             ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config")
      throw CLI::ConfigError("unknown configuration key '" + key + "'");
    if (opt->count() > 0) continue;  // explicit flag wins
    opt->add_result(value);
    opt->run_callback();
  }
}

void add_train_flags(CLI::App* c, TrainArgs& t, bool with_variant_seed) {
  c->add_option("--manifest", t.manifest, "training manifest")->required();
  c->add_option("--val-manifest", t.val_manifest, "validation manifest");
  c->add_option("--out", t.out, "output directory")->required();
  if (with_variant_seed) {
    c->add_option("--variant", t.variant, "fcn | s-fcn | s-fcn-loc")
        ->check(CLI::IsMember({"fcn", "s-fcn", "s-fcn-loc"}));
    c->add_option("--seed", t.seed, "rng seed");
  }
  c->add_option("--attach", t.attach, "location-prior tap: pool4 | conv7")
      ->check(CLI::IsMember({"pool4", "conv7"}));
  c->add_option("--iters", t.iters, "sgd iterations")->check(CLI::PositiveNumber);
  c->add_option("--batch", t.batch, "mini-batch size")->check(CLI::PositiveNumber);
  c->add_option("--width", t.width, "base channel count C")->check(CLI::PositiveNumber);
  c->add_option("--lr", t.lr, "weight learning rate (bias rate is 2x)");
  c->add_option("--momentum", t.momentum, "sgd momentum");
  c->add_option("--decay", t.decay, "weight decay");
  c->add_option("--dropout", t.dropout, "dropout rate for conv6/conv7");
  c->add_option("--loss", t.loss, "loss reduction: mean | sum")
      ->check(CLI::IsMember({"mean", "sum"}));
  c->add_option("--tau", t.tau, "classification threshold");
  c->add_option("--eval-interval", t.eval_interval, "validation cadence (0 = off)");
  c->add_option("--log-interval", t.log_interval, "loss-curve row cadence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"road segmentation with a siamesed fully convolutional network"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker-thread cap")->check(CLI::PositiveNumber);

  GenArgs gen;
  auto* cg = app.add_subcommand("gen-data", "generate a synthetic dataset");
  cg->add_option("--out", gen.out, "output directory")->required();
  cg->add_option("--count", gen.count, "number of samples")->check(CLI::PositiveNumber);
  cg->add_option("--first-scene", gen.first, "index of the first scene");
  cg->add_option("--seed", gen.seed, "rng seed");
  cg->add_option("--size", gen.size, "square extent, multiple of 32");
  cg->add_option("--noise", gen.noise, "additive noise amplitude");
  cg->add_option("--occluders", gen.occluders, "max occluders per scene");
  cg->add_option("--shadows", gen.shadows, "max shadows per scene");

  ContourArgs con;
  auto* cc = app.add_subcommand("contour", "compute or ingest contour maps");
  cc->add_option("--manifest", con.manifest, "dataset manifest")->required();
  cc->add_option("--external", con.external, "directory of precomputed contour PGMs");

  TrainArgs tr;
  auto* ct = app.add_subcommand("train", "train one variant");
  add_train_flags(ct, tr, true);

  AblateArgs ab;
  auto* ca = app.add_subcommand("ablate", "run the stepwise fcn/s-fcn/s-fcn-loc study");
  add_train_flags(ca, ab.base, false);
  ca->add_option("--seeds", ab.seeds, "seed list")->delimiter(',');
  ca->add_flag("--attach-compare", ab.attach_compare,
               "compare pool4 vs conv7 location-prior attachment instead");

  EvalArgs ev;
  auto* ce = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ce->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  ce->add_option("--manifest", ev.manifest, "dataset manifest")->required();
  ce->add_option("--out", ev.out, "output directory")->required();
  ce->add_option("--tau", ev.tau, "classification threshold");
  ce->add_option("--gamma", ev.gamma, "f-measure weight");
  ce->add_option("--bev", ev.bev,
                 "8 floats: perspective corners mapped to the BEV image corners")
      ->expected(8);
  ce->add_option("--bev-height", ev.bev_h, "BEV rows");
  ce->add_option("--bev-width", ev.bev_w, "BEV columns");

  FreqArgs fr;
  auto* cf = app.add_subcommand("freq-map", "per-pixel road frequency over a dataset");
  cf->add_option("--manifest", fr.manifest, "dataset manifest")->required();
  cf->add_option("--out", fr.out, "output directory")->required();

  std::map<const CLI::App*, std::string> config_paths;
  for (CLI::App* sub : {cg, cc, ct, ca, ce, cf})
    sub->add_option("--config", config_paths[sub],
                    "flat key=value configuration file (flags win)");

  try {
    app.parse(argc, argv);
    for (CLI::App* sub : {cg, cc, ct, ca, ce, cf})
      if (*sub && !config_paths[sub].empty()) apply_config(sub, config_paths[sub]);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  (void)threads;  // commands run serially; the cap is honored trivially

  try {
    if (*cg) return cmd_gen_data(gen);
    if (*cc) return cmd_contour(con);
    if (*ct) return cmd_train(tr);
    if (*ca) return cmd_ablate(ab);
    if (*ce) return cmd_eval(ev);
    if (*cf) return cmd_freq_map(fr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
