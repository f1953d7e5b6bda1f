// Copyright 2026 The BPKD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <CLI11.hpp>
#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include "bpkd/edge_masks.hpp"
#include "bpkd/gradcheck.hpp"
#include "bpkd/losses.hpp"
#include "bpkd/metrics.hpp"
#include "bpkd/report.hpp"
#include "bpkd/tensor_io.hpp"
#include "bpkd/uncertainty.hpp"

namespace bpkd::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Flag-level problem detected after parsing; maps to the usage exit status.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Files are staged in memory and only written once the whole command has
/// succeeded, so a failing run leaves nothing behind.
class PendingOutputs {
 public:
  void add(fs::path path, std::string bytes) { files_.emplace_back(std::move(path), std::move(bytes)); }

  void commit() {
    std::vector<fs::path> staged;
    try {
      for (const auto& [path, bytes] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".partial";
        write_file(tmp, bytes);
        staged.push_back(tmp);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& tmp : staged) fs::remove(tmp, ec);
      throw;
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      fs::rename(staged[i], files_[i].first, ec);
      if (ec) {
        throw IoError("cannot move output into place at '" + files_[i].first.string() +
                      "': " + ec.message());
      }
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

struct RunConfig {
  std::string teacher, student, labels, logits, masks, features;
  std::vector<std::string> preds, gts;
  std::string pred_glob, gt_glob;
  std::string out, grad_out, out_edge, out_body, png_out, tensor_out, csv_out, band_png_dir,
      out_dir;
  std::size_t width = kDefaultEdgeWidth;
  std::size_t stride = kDefaultStride;
  std::size_t num_classes = 0;
  double lambda_b = kDefaultLambdaBody;
  double lambda_e = kDefaultLambdaEdge;
  std::string alpha = "2";
  double temperature = kDefaultTemperature;
  std::optional<std::size_t> trimap_width;
  std::size_t bins = 10;
  std::string mask_source = "gt";
  unsigned ignore = kDefaultIgnoreValue;
  double step = kDefaultFiniteDifferenceStep;
  bool corrupt_gradient = false;
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t image_width = 64;
};

std::vector<double> parse_alpha(const std::string& text, std::size_t num_classes) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("--alpha: '" + item + "' is not a number");
    }
    if (used != item.size()) throw UsageError("--alpha: '" + item + "' is not a number");
    if (!std::isfinite(v) || v < 0.0) throw UsageError("--alpha entries must be finite and >= 0");
    values.push_back(v);
  }
  if (values.size() == 1) return std::vector<double>(num_classes, values[0]);
  if (values.size() != num_classes) {
    throw UsageError("--alpha lists " + std::to_string(values.size()) + " values for " +
                     std::to_string(num_classes) + " classes");
  }
  return values;
}

void check_flags(const RunConfig& cfg) {
  try {
    check_band_width(cfg.width);
    if (cfg.trimap_width) check_band_width(*cfg.trimap_width);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (cfg.stride == 0) throw UsageError("stride must be positive");
  if (!(cfg.lambda_b >= 0.0) || !std::isfinite(cfg.lambda_b)) throw UsageError("--lambda-b must be >= 0");
  if (!(cfg.lambda_e >= 0.0) || !std::isfinite(cfg.lambda_e)) throw UsageError("--lambda-e must be >= 0");
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) throw UsageError("--temp must be > 0");
  if (cfg.bins == 0) throw UsageError("--bins must be positive");
}

std::string report_bytes(const json& payload) {
  ReportDocument doc;
  doc.payload = payload;
  return serialize_report(doc);
}

// Teacher/student logits plus the edge masks they are distilled under.
struct LossInputs {
  LogitTensor teacher;
  LogitTensor student;
  SoftMaskStack edge;
  EdgeConfig geometry;
  LossWeights weights;
};

LossInputs load_loss_inputs(const RunConfig& cfg) {
  LossInputs in;
  in.teacher = logits_from_dense(load_tensor(cfg.teacher));
  in.student = logits_from_dense(load_tensor(cfg.student));
  if (!in.teacher.same_shape(in.student)) {
    throw ShapeError("teacher " + shape_string(to_dense(in.teacher).shape) + " and student " +
                     shape_string(to_dense(in.student).shape) + " logits differ in shape");
  }
  const std::size_t classes = in.teacher.channels();
  if (cfg.num_classes != 0 && cfg.num_classes != classes) {
    throw ShapeError("--classes " + std::to_string(cfg.num_classes) + " but logits have " +
                     std::to_string(classes) + " channels");
  }
  in.weights.lambda_body = cfg.lambda_b;
  in.weights.lambda_edge = cfg.lambda_e;
  in.weights.temperature = cfg.temperature;
  in.weights.alpha = parse_alpha(cfg.alpha, classes);

  LabelMap labels;
  in.geometry = EdgeConfig{cfg.width, cfg.stride, classes};
  if (cfg.mask_source == "teacher") {
    labels = labels_from_logits(in.teacher, static_cast<Label>(cfg.ignore));
    in.geometry.stride = 1;
  } else {
    labels = load_label_map(cfg.labels, static_cast<Label>(cfg.ignore));
  }
  in.edge = build_soft_edge_masks(labels, in.geometry);
  if (!in.edge.same_shape(in.teacher)) {
    throw ShapeError("edge masks (" + std::to_string(in.edge.channels()) + "," +
                     std::to_string(in.edge.height()) + "," + std::to_string(in.edge.width()) +
                     ") do not match logits (" + std::to_string(classes) + "," +
                     std::to_string(in.teacher.height()) + "," +
                     std::to_string(in.teacher.width()) + ")");
  }
  return in;
}

void require_labels_or_teacher(const RunConfig& cfg) {
  if (cfg.mask_source == "gt" && cfg.labels.empty()) {
    throw UsageError("--labels is required unless --mask-source teacher");
  }
}

// Expands a pattern whose wildcards are confined to the file name part.
std::vector<std::string> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  const std::string name = p.filename().string();
  std::vector<std::string> matches;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const std::string file = it->path().filename().string();
    if (fnmatch(name.c_str(), file.c_str(), 0) == 0) matches.push_back((dir / file).string());
  }
  if (ec) throw IoError("cannot list '" + dir.string() + "': " + ec.message());
  std::sort(matches.begin(), matches.end());
  if (matches.empty()) throw IoError("pattern '" + pattern + "' matched no files");
  return matches;
}


int run_gen_masks(const RunConfig& cfg, std::ostream& out) {
  if (cfg.num_classes == 0) throw UsageError("--classes must be positive");
  const LabelMap labels = load_label_map(cfg.labels, static_cast<Label>(cfg.ignore));
  const EdgeConfig geometry{cfg.width, cfg.stride, cfg.num_classes};
  const SoftMaskStack masks = build_soft_edge_masks(labels, geometry);

  PendingOutputs outputs;
  outputs.add(cfg.out, encode_tensor(to_dense(masks)));
  if (!cfg.band_png_dir.empty()) {
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
      const BinaryMap band = class_edge_band(labels, static_cast<Label>(c), cfg.width, cfg.num_classes);
      outputs.add(fs::path(cfg.band_png_dir) / ("band_" + std::to_string(c) + ".png"),
                  encode_binary_png(band));
    }
  }
  std::vector<std::size_t> counts(cfg.num_classes, 0);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    for (double v : masks.plane(c)) counts[c] += v > 0.0 ? 1 : 0;
  }
  outputs.commit();
  json summary;
  summary["edge_pixel_counts"] = counts;
  summary["shape"] = {masks.channels(), masks.height(), masks.width()};
  out << serialize_compact(summary) << "\n";
  return kExitOk;
}

int run_loss(const RunConfig& cfg, std::ostream& out) {
  require_labels_or_teacher(cfg);
  const LossInputs in = load_loss_inputs(cfg);
  LossReport report = bpkd_loss(in.teacher, in.student, in.edge, in.weights);
  report.geometry = in.geometry;
  json payload = to_json(report);
  payload["config"]["mask_source"] = cfg.mask_source;

  PendingOutputs outputs;
  outputs.add(cfg.out, report_bytes(payload));
  if (!cfg.grad_out.empty()) {
    outputs.add(cfg.grad_out,
                encode_tensor(to_dense(bpkd_grad(in.teacher, in.student, in.edge, in.weights))));
  }
  outputs.commit();
  out << serialize_compact(payload) << "\n";
  return kExitOk;
}

int run_gradcheck(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_labels_or_teacher(cfg);
  if (!(cfg.step > 0.0)) throw UsageError("--step must be positive");
  const LossInputs in = load_loss_inputs(cfg);
  GradientTensor analytic = bpkd_grad(in.teacher, in.student, in.edge, in.weights);
  if (cfg.corrupt_gradient) {
    // harness self-test: a wrong gradient must be caught
    for (double& g : analytic.data()) g = 1.5 * g + 1e-3;
  }
  const GradCheckReport check =
      compare_gradient(analytic, in.teacher, in.student, in.edge, in.weights, cfg.step);
  json payload = to_json(check);
  if (!check.passed()) {
    err << "gradient check failed: max relative error " << check.max_rel_error << " >= "
        << kGradientRelTolerance << "\n";
    out << serialize_compact(payload) << "\n";
    return kExitDataError;
  }
  PendingOutputs outputs;
  if (!cfg.out.empty()) outputs.add(cfg.out, report_bytes(payload));
  outputs.commit();
  out << serialize_compact(payload) << "\n";
  return kExitOk;
}

int run_eval(const RunConfig& cfg, std::ostream& out) {
  if (cfg.num_classes == 0) throw UsageError("--classes must be positive");
  if (cfg.pred_glob.empty() != cfg.gt_glob.empty()) {
    throw UsageError("--pred-glob and --gt-glob go together");
  }
  std::vector<std::string> preds = cfg.preds;
  std::vector<std::string> gts = cfg.gts;
  if (!cfg.pred_glob.empty()) {
    const auto p = expand_glob(cfg.pred_glob);
    const auto g = expand_glob(cfg.gt_glob);
    if (p.size() != g.size()) {
      throw ValidationError("--pred-glob matched " + std::to_string(p.size()) +
                            " files but --gt-glob matched " + std::to_string(g.size()));
    }
    preds.insert(preds.end(), p.begin(), p.end());
    gts.insert(gts.end(), g.begin(), g.end());
  }
  if (preds.size() != gts.size() || preds.empty()) {
    throw UsageError("--pred and --gt must be given the same number of times");
  }
  ConfusionMatrix full(cfg.num_classes);
  ConfusionMatrix band(cfg.num_classes);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const LabelMap pred = load_label_map(preds[k], static_cast<Label>(cfg.ignore));
    const LabelMap gt = load_label_map(gts[k], static_cast<Label>(cfg.ignore));
    full += confusion(pred, gt, cfg.num_classes);
    if (cfg.trimap_width) {
      const BinaryMap region = trimap_region(gt, *cfg.trimap_width);
      band += confusion(pred, gt, cfg.num_classes, &region);
    }
  }
  const MetricsReport standard = miou(full);
  json payload;
  payload["standard"] = to_json(standard);
  payload["num_classes"] = cfg.num_classes;
  payload["images"] = preds.size();
  std::optional<MetricsReport> trimap;
  if (cfg.trimap_width) {
    trimap = miou(band);
    trimap->band_width = *cfg.trimap_width;
    payload["trimap"] = to_json(*trimap);
  }
  PendingOutputs outputs;
  outputs.add(cfg.out, report_bytes(payload));
  if (!cfg.csv_out.empty()) outputs.add(cfg.csv_out, per_class_csv(standard));
  outputs.commit();
  out << serialize_compact(payload) << "\n";
  return kExitOk;
}

int run_entropy(const RunConfig& cfg, std::ostream& out) {
  const DenseTensor features = load_tensor(cfg.features);
  if (features.rank() != 3) {
    throw ShapeError("features must be a 3-D (C,H,W) tensor, got shape " +
                     shape_string(features.shape));
  }
  const EntropyMap ent = entropy_map(features);
  json payload;
  double sum = 0.0;
  for (double v : ent.values) sum += v;
  payload["mean_entropy"] = sum / static_cast<double>(ent.values.size());
  payload["height"] = ent.height;
  payload["width"] = ent.width;
  if (!cfg.preds.empty() || !cfg.gts.empty()) {
    if (cfg.preds.size() != 1 || cfg.gts.size() != 1) {
      throw UsageError("entropy correlation takes exactly one --pred and one --gt");
    }
    const LabelMap pred = load_label_map(cfg.preds[0], static_cast<Label>(cfg.ignore));
    const LabelMap gt = load_label_map(cfg.gts[0], static_cast<Label>(cfg.ignore));
    const std::size_t width = cfg.trimap_width.value_or(kDefaultEdgeWidth);
    payload["correlation"] = to_json(edge_entropy_accuracy(ent, pred, gt, width, cfg.bins));
    payload["correlation"]["band_width"] = width;
  }
  PendingOutputs outputs;
  if (!cfg.png_out.empty()) {
    outputs.add(cfg.png_out, encode_gray_png(ent.certainty_pixels(), ent.height, ent.width));
  }
  if (!cfg.tensor_out.empty()) outputs.add(cfg.tensor_out, encode_tensor(ent.to_dense()));
  if (!cfg.out.empty()) outputs.add(cfg.out, report_bytes(payload));
  outputs.commit();
  out << serialize_compact(payload) << "\n";
  return kExitOk;
}

int run_decompose(const RunConfig& cfg, std::ostream& out) {
  const LogitTensor z = logits_from_dense(load_tensor(cfg.logits));
  const SoftMaskStack m = masks_from_dense(load_tensor(cfg.masks));
  const Decomposition d = decompose(z, m);
  double max_err = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    max_err = std::max(max_err, std::abs(z.data()[i] - (d.edge.data()[i] + d.body.data()[i])));
  }
  json payload;
  payload["max_reconstruction_error"] = max_err;
  payload["shape"] = {z.channels(), z.height(), z.width()};
  PendingOutputs outputs;
  outputs.add(cfg.out_edge, encode_tensor(to_dense(d.edge)));
  outputs.add(cfg.out_body, encode_tensor(to_dense(d.body)));
  if (!cfg.out.empty()) outputs.add(cfg.out, report_bytes(payload));
  outputs.commit();
  out << serialize_compact(payload) << "\n";
  return kExitOk;
}

// Synthetic demo instance: Voronoi label map, teacher logits that follow it,
// a noisy student, and full-resolution student features/predictions.
int run_synth(const RunConfig& cfg, std::ostream& out) {
  if (cfg.num_classes < 2) throw UsageError("--classes must be >= 2");
  if (cfg.height % cfg.stride || cfg.image_width % cfg.stride || cfg.height == 0 ||
      cfg.image_width == 0) {
    throw UsageError("--height/--image-width must be positive multiples of --stride");
  }
  std::mt19937_64 rng(cfg.seed);
  const std::size_t h = cfg.height, w = cfg.image_width, s = cfg.stride, classes = cfg.num_classes;
  const std::size_t seeds = classes + 3;
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(w));
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(h));
  std::uniform_int_distribution<std::size_t> uc(0, classes - 1);
  std::vector<std::pair<double, double>> sites(seeds);
  std::vector<Label> site_class(seeds);
  for (std::size_t k = 0; k < seeds; ++k) {
    sites[k] = {uy(rng), ux(rng)};
    site_class[k] = static_cast<Label>(k < classes ? k : uc(rng));
  }
  LabelMap labels(h, w, 0, static_cast<Label>(cfg.ignore));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double best = 1e300;
      for (std::size_t k = 0; k < seeds; ++k) {
        const double dy = sites[k].first - static_cast<double>(r);
        const double dx = sites[k].second - static_cast<double>(c);
        if (dy * dy + dx * dx < best) {
          best = dy * dy + dx * dx;
          labels(r, c) = site_class[k];
        }
      }
    }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  LogitTensor teacher(classes, h / s, w / s);
  LogitTensor student(classes, h / s, w / s);
  for (std::size_t r = 0; r < h / s; ++r) {
    for (std::size_t c = 0; c < w / s; ++c) {
      const Label centre = labels(r * s + s / 2, c * s + s / 2);
      for (std::size_t k = 0; k < classes; ++k) {
        teacher(k, r, c) = (k == centre ? 4.0 : 0.0) + 0.5 * noise(rng);
        student(k, r, c) = teacher(k, r, c) + 1.5 * noise(rng);
      }
    }
  }
  DenseTensor features;
  features.shape = {classes, h, w};
  features.values.resize(classes * h * w);
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        features.values[(k * h + r) * w + c] = student(k, r / s, c / s);
      }
    }
  }
  const LabelMap low_res = labels_from_logits(student, static_cast<Label>(cfg.ignore));
  LabelMap pred(h, w, 0, static_cast<Label>(cfg.ignore));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) pred(r, c) = low_res(r / s, c / s);
  }

  const fs::path dir(cfg.out_dir);
  PendingOutputs outputs;
  outputs.add(dir / "labels.png", encode_label_png(labels));
  outputs.add(dir / "pred.png", encode_label_png(pred));
  outputs.add(dir / "teacher.npy", encode_tensor(to_dense(teacher)));
  outputs.add(dir / "student.npy", encode_tensor(to_dense(student)));
  outputs.add(dir / "features.npy", encode_tensor(features));
  outputs.commit();
  json summary;
  summary["out_dir"] = dir.string();
  summary["logit_shape"] = {classes, h / s, w / s};
  summary["label_shape"] = {h, w};
  out << serialize_compact(summary) << "\n";
  return kExitOk;
}

void add_geometry(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--width", cfg.width, "Edge band width (odd, >= 3)")->capture_default_str();
  cmd->add_option("--stride", cfg.stride, "Network output stride")->capture_default_str();
}

void add_loss_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--teacher", cfg.teacher, "Teacher logits (C,H',W') tensor")->required();
  cmd->add_option("--student", cfg.student, "Student logits (C,H',W') tensor")->required();
  cmd->add_option("--labels", cfg.labels, "Ground-truth label map (PNG or integer tensor)");
  cmd->add_option("--mask-source", cfg.mask_source, "Edge mask source")
      ->check(CLI::IsMember({"gt", "teacher"}))
      ->capture_default_str();
  cmd->add_option("--classes", cfg.num_classes, "Class count (checked against the logits)");
  add_geometry(cmd, cfg);
  cmd->add_option("--lambda-b", cfg.lambda_b, "Body loss weight")->capture_default_str();
  cmd->add_option("--lambda-e", cfg.lambda_e, "Edge loss weight")->capture_default_str();
  cmd->add_option("--alpha", cfg.alpha, "Per-class edge weight: scalar or comma list")
      ->capture_default_str();
  cmd->add_option("--temp", cfg.temperature, "Body loss temperature")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary-privileged distillation losses, edge masks and boundary metrics", "bpkd"};
  app.require_subcommand(1);
  RunConfig cfg;
  app.add_option("--ignore", cfg.ignore, "Ignore label value")->capture_default_str();

  auto* gen = app.add_subcommand("gen-masks", "Build per-class soft edge masks from a label map");
  gen->add_option("--labels", cfg.labels, "Label map (PNG or integer tensor)")->required();
  gen->add_option("--classes", cfg.num_classes, "Number of classes")->required();
  add_geometry(gen, cfg);
  gen->add_option("--out", cfg.out, "Output mask stack (.npy)")->required();
  gen->add_option("--band-png-dir", cfg.band_png_dir, "Also write band_<c>.png per class");

  auto* loss = app.add_subcommand("loss", "Evaluate the edge/body distillation loss");
  add_loss_flags(loss, cfg);
  loss->add_option("--out", cfg.out, "Loss report (.json)")->required();
  loss->add_option("--grad-out", cfg.grad_out, "Gradient w.r.t. student logits (.npy)");

  auto* grad = app.add_subcommand("gradcheck", "Check the analytic gradient by central differences");
  add_loss_flags(grad, cfg);
  grad->add_option("--step", cfg.step, "Finite-difference step")->capture_default_str();
  grad->add_option("--out", cfg.out, "Check report (.json)");
  grad->add_flag("--corrupt-gradient", cfg.corrupt_gradient)->group("");

  auto* eval = app.add_subcommand("eval", "mIoU / mAcc, optionally inside the boundary band");
  eval->add_option("--pred", cfg.preds, "Predicted label map (repeatable)");
  eval->add_option("--gt", cfg.gts, "Ground-truth label map (repeatable, paired with --pred)");
  eval->add_option("--pred-glob", cfg.pred_glob, "Prediction file pattern, paired by sorted name");
  eval->add_option("--gt-glob", cfg.gt_glob, "Ground-truth file pattern");
  eval->add_option("--classes", cfg.num_classes, "Number of classes")->required();
  eval->add_option("--trimap-width", cfg.trimap_width, "Also report metrics in this band");
  eval->add_option("--out", cfg.out, "Metrics report (.json)")->required();
  eval->add_option("--csv", cfg.csv_out, "Per-class CSV (class,iou,acc)");

  auto* ent = app.add_subcommand("entropy", "Per-pixel entropy maps and edge accuracy correlation");
  ent->add_option("--features", cfg.features, "Feature tensor (C,H,W)")->required();
  ent->add_option("--png", cfg.png_out, "Certainty image (bright = certain)");
  ent->add_option("--tensor-out", cfg.tensor_out, "Normalized entropy (H,W) tensor");
  ent->add_option("--pred", cfg.preds, "Predicted label map");
  ent->add_option("--gt", cfg.gts, "Ground-truth label map");
  ent->add_option("--trimap-width", cfg.trimap_width, "Band width for the correlation");
  ent->add_option("--bins", cfg.bins, "Entropy bins")->capture_default_str();
  ent->add_option("--out", cfg.out, "Report (.json)");

  auto* dec = app.add_subcommand("decompose", "Split logits into edge and body parts");
  dec->add_option("--logits", cfg.logits, "Logits (C,H',W')")->required();
  dec->add_option("--masks", cfg.masks, "Edge mask stack (C,H',W')")->required();
  dec->add_option("--out-edge", cfg.out_edge, "Edge logits (.npy)")->required();
  dec->add_option("--out-body", cfg.out_body, "Body logits (.npy)")->required();
  dec->add_option("--out", cfg.out, "Report (.json)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic teacher/student/label instance");
  synth->add_option("--seed", cfg.seed, "Random seed")->required();
  synth->add_option("--classes", cfg.num_classes, "Number of classes")->required();
  synth->add_option("--height", cfg.height, "Label map height")->capture_default_str();
  synth->add_option("--image-width", cfg.image_width, "Label map width")->capture_default_str();
  synth->add_option("--stride", cfg.stride, "Output stride")->capture_default_str();
  synth->add_option("--out-dir", cfg.out_dir, "Destination directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    check_flags(cfg);
    if (gen->parsed()) return run_gen_masks(cfg, out);
    if (loss->parsed()) return run_loss(cfg, out);
    if (grad->parsed()) return run_gradcheck(cfg, out, err);
    if (eval->parsed()) return run_eval(cfg, out);
    if (ent->parsed()) return run_entropy(cfg, out);
    if (dec->parsed()) return run_decompose(cfg, out);
    if (synth->parsed()) return run_synth(cfg, out);
  } catch (const UsageError& e) {
    err << "bpkd: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "bpkd: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "bpkd: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace bpkd::cli
