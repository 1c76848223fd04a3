#include "mvuq/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>
#include <toml.hpp>
#define XXH_INLINE_ALL
#include <xxhash.h>

#include "mvuq/bayes.hpp"
#include "mvuq/error.hpp"
#include "mvuq/fmx.hpp"
#include "mvuq/hetero.hpp"
#include "mvuq/kriging.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/random.hpp"
#include "mvuq/raster.hpp"
#include "mvuq/table_io.hpp"

namespace mvuq::pipeline {
namespace fs = std::filesystem;
namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(Errc::Config, msg); }

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"run", {"seed", "output_dir", "jobs"}},
      {"inputs", {"rasters", "features", "targets", "target_column", "locations"}},
      {"views", {"names"}},
      {"featurize", {"filters", "patch", "stride", "seed", "calibrate"}},
      {"models", {"list"}},
      {"evaluate", {"folds", "level", "view_sets", "clamp_01", "standardize"}},
      {"ridge", {"grid", "inner_folds"}},
      {"hetero", {"lr", "epochs", "patience", "warm_start_alpha"}},
      {"blr", {"prior", "nu", "slab_scale", "c", "intercept_sd", "tau_scale", "chains", "draws", "warmup", "sigma2",
               "pin_scales"}},
      {"krige", {"enabled", "model", "value", "res_km", "bbox", "bins"}},
  };
  return s;
}

// Typed accessors that name the offending key on mismatch.
class Section {
 public:
  Section(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  const toml::node* node(const std::string& key) const { return t_ ? t_->get(key) : nullptr; }

  std::optional<std::string> str(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<std::string>(); v && n->is_string()) return *v;
    type_error(key, "a string");
  }
  std::optional<double> num(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_floating_point() || n->is_integer()) return n->value<double>();
    type_error(key, "a number");
  }
  std::optional<std::int64_t> integer(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_integer()) return n->value<std::int64_t>();
    type_error(key, "an integer");
  }
  std::optional<std::size_t> count(const std::string& key, std::int64_t min = 0) const {
    const auto v = integer(key);
    if (!v) return std::nullopt;
    if (*v < min) config_error("[" + name_ + "] " + key + " must be >= " + std::to_string(min));
    return static_cast<std::size_t>(*v);
  }
  std::optional<bool> boolean(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_boolean()) return n->value<bool>();
    type_error(key, "a boolean");
  }
  std::optional<std::vector<std::string>> strings(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_string()) return std::vector<std::string>{*n->value<std::string>()};
    const auto* arr = n->as_array();
    if (!arr) type_error(key, "a string or array of strings");
    std::vector<std::string> out;
    for (const auto& e : *arr) {
      if (!e.is_string()) type_error(key, "an array of strings");
      out.push_back(*e.value<std::string>());
    }
    return out;
  }
  std::optional<std::vector<double>> numbers(const std::string& key) const {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    const auto* arr = n->as_array();
    if (!arr) type_error(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      if (!e.is_number()) type_error(key, "an array of numbers");
      out.push_back(*e.value<double>());
    }
    return out;
  }

 private:
  [[noreturn]] void type_error(const std::string& key, const std::string& what) const {
    config_error("[" + name_ + "] " + key + " must be " + what);
  }
  const toml::table* t_;
  std::string name_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::vector<fs::path> raster_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".btsr") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> sidecar_band_labels(const fs::path& raster_path) {
  const auto side = nlohmann::json::parse(read_text_file(sidecar_path(raster_path, ".bands.json")));
  const auto& arr = side.is_array() ? side : side.at("bands");
  std::vector<std::string> labels;
  for (const auto& l : arr) labels.push_back(l.is_object() ? l.at("label").get<std::string>() : l.get<std::string>());
  return labels;
}

// FMX header fields (n, d) read without touching the payload.
std::pair<std::uint64_t, std::uint64_t> fmx_shape(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  unsigned char h[24];
  if (!in.read(reinterpret_cast<char*>(h), sizeof h)) throw FormatError(0, path.string() + ": truncated FMX header");
  if (std::string(reinterpret_cast<char*>(h), 4) != "FMX1") throw FormatError(0, path.string() + ": bad FMX magic");
  auto u64 = [&](int off) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | h[off + i];
    return v;
  };
  return {u64(8), u64(16)};
}

std::string view_name_of(const fs::path& fmx) {
  const auto man = sidecar_path(fmx, ".manifest.json");
  if (fs::exists(man)) {
    const auto m = features::read_manifest(man);
    if (!m.view.empty()) return m.view;
  }
  return fmx.stem().string();
}

template <class F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    config_error("TOML syntax error at line " + std::to_string(e.source().begin.line) + ": " +
                 std::string(e.description()));
  }
  const auto& sch = schema();
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    const auto it = sch.find(k);
    if (it == sch.end()) {
      std::string valid;
      for (const auto& [s, _] : sch) valid += (valid.empty() ? "" : ", ") + s;
      config_error("unknown section [" + k + "]; valid sections: " + valid);
    }
    if (!node.is_table()) config_error("'" + k + "' must be a table section");
    for (const auto& [sub, _] : *node.as_table()) {
      if (!it->second.count(std::string(sub.str()))) {
        std::string valid;
        for (const auto& s : it->second) valid += (valid.empty() ? "" : ", ") + s;
        config_error("unknown key '" + std::string(sub.str()) + "' in [" + k + "]; valid keys: " + valid);
      }
    }
  }
  auto sec = [&](const std::string& name) { return Section(root[name].as_table(), name); };

  PipelineConfig c;
  c.text = text;
  const auto run = sec("run");
  if (auto v = run.integer("seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = run.str("output_dir")) c.output_dir = resolve(base_dir, *v);
  else c.output_dir = resolve(base_dir, "out");
  if (auto v = run.count("jobs", 1)) c.jobs = *v;

  const auto in = sec("inputs");
  if (auto v = in.str("rasters")) c.raster_dir = resolve(base_dir, *v);
  if (auto v = in.strings("features")) {
    for (const auto& f : *v) c.feature_files.push_back(resolve(base_dir, f));
  }
  if (auto v = in.str("targets")) c.targets = resolve(base_dir, *v);
  else config_error("[inputs] targets is required");
  if (auto v = in.str("target_column")) c.target_column = *v;
  if (auto v = in.str("locations")) c.locations = resolve(base_dir, *v);
  if (c.raster_dir && !c.feature_files.empty()) config_error("[inputs] give either rasters or features, not both");

  if (auto v = sec("views").strings("names")) c.views = *v;
  if (c.raster_dir) {
    if (c.views.empty()) {
      for (const auto& p : raster::ViewSpec::presets()) c.views.push_back(p.name);
    }
    for (const auto& v : c.views) {
      try {
        raster::ViewSpec::parse(v);
      } catch (const Error& e) {
        config_error(std::string("[views] ") + e.what());
      }
    }
  }
  if (!c.raster_dir && c.feature_files.empty()) config_error("need [inputs] rasters or at least one feature file");

  const auto fz = sec("featurize");
  if (auto v = fz.count("filters", 1)) c.conv.n_filters = *v;
  if (auto v = fz.count("patch", 1)) c.conv.patch_size = *v;
  if (auto v = fz.count("stride", 0)) c.conv.stride = *v;
  if (auto v = fz.integer("seed")) {
    c.conv.seed = static_cast<std::uint64_t>(*v);
    c.featurize_seed_set = true;
  }
  if (auto v = fz.boolean("calibrate")) c.calibrate = *v;

  const auto models = sec("models").strings("list");
  if (!models || models->empty()) config_error("[models] list must name at least one model");
  for (const auto& m : *models) {
    try {
      c.models.push_back(eval::method_from_string(m));
    } catch (const Error& e) {
      config_error(std::string("[models] ") + e.what());
    }
  }
  c.eval.methods = c.models;

  const auto ev = sec("evaluate");
  if (auto v = ev.count("folds", 2)) c.eval.folds = *v;
  if (auto v = ev.num("level")) {
    if (!(*v > 0.0 && *v < 1.0)) config_error("[evaluate] level must lie in (0, 1)");
    c.eval.level = *v;
  }
  if (auto v = ev.strings("view_sets")) c.view_sets = *v;
  if (auto v = ev.boolean("clamp_01")) c.eval.clamp_01 = *v;
  if (auto v = ev.boolean("standardize")) c.eval.standardize = *v;

  const auto ridge = sec("ridge");
  if (const auto* g = ridge.node("grid")) {
    if (g->is_string()) {
      if (*g->value<std::string>() != "default") config_error("[ridge] grid must be \"default\" or an array of penalties");
    } else {
      c.eval.alpha_grid = *ridge.numbers("grid");
      for (double a : c.eval.alpha_grid) {
        if (!(a >= 0.0)) config_error("[ridge] grid penalties must be >= 0");
      }
    }
  }
  if (auto v = ridge.count("inner_folds", 2)) c.eval.inner_folds = *v;

  const auto het = sec("hetero");
  if (auto v = het.num("lr")) c.eval.hetero.lr = *v;
  if (auto v = het.count("epochs", 1)) c.eval.hetero.epochs = *v;
  if (auto v = het.count("patience", 1)) c.eval.hetero.patience = *v;
  if (auto v = het.num("warm_start_alpha")) c.eval.hetero.warm_start_alpha = *v;

  const auto blr = sec("blr");
  auto& prior = c.eval.prior;
  if (auto v = blr.str("prior")) {
    try {
      prior.kind = bayes::prior_kind_from_string(*v);
    } catch (const Error& e) {
      config_error(std::string("[blr] ") + e.what());
    }
  }
  if (auto v = blr.num("nu")) prior.nu = *v;
  if (auto v = blr.num("slab_scale")) prior.slab_scale = *v;
  if (auto v = blr.num("c")) prior.c = *v;
  if (auto v = blr.num("intercept_sd")) prior.intercept_sd = *v;
  if (auto v = blr.num("tau_scale")) prior.tau_scale = *v;
  try {
    prior.validate();
  } catch (const Error& e) {
    config_error(std::string("[blr] ") + e.what());
  }
  c.eval.blr_c = prior.c;
  c.eval.intercept_sd = prior.intercept_sd;
  if (auto v = blr.num("sigma2")) {
    if (!(*v > 0.0)) config_error("[blr] sigma2 must be > 0");
    c.eval.blr_sigma2 = *v;
  }
  if (auto v = blr.count("chains", 1)) c.eval.mcmc.chains = *v;
  if (auto v = blr.count("draws", 2)) c.eval.mcmc.draws = *v;
  if (auto v = blr.count("warmup", 0)) c.eval.mcmc.warmup = *v;
  if (auto v = blr.boolean("pin_scales")) c.eval.mcmc.pin_scales = *v;
  if (c.eval.mcmc.warmup >= c.eval.mcmc.draws) config_error("[blr] warmup must be smaller than draws");

  const auto kr = sec("krige");
  if (auto v = kr.boolean("enabled")) c.krige = *v;
  if (auto v = kr.str("model")) {
    if (*v != "hetero" && *v != "blr_conjugate" && *v != "blr_mcmc") {
      config_error("[krige] model must be hetero, blr_conjugate or blr_mcmc");
    }
    c.krige_model = *v;
  }
  if (auto v = kr.str("value")) {
    if (*v != "posterior_mean" && *v != "posterior_variance" && *v != "target") {
      config_error("[krige] value must be posterior_mean, posterior_variance or target");
    }
    c.krige_value = *v;
  }
  if (auto v = kr.num("res_km")) {
    if (!(*v > 0.0)) config_error("[krige] res_km must be > 0");
    c.krige_res_km = *v;
  }
  if (auto v = kr.numbers("bbox")) {
    if (v->size() != 4) config_error("[krige] bbox must be [lon0, lat0, lon1, lat1]");
    c.krige_bbox = std::array<double, 4>{(*v)[0], (*v)[1], (*v)[2], (*v)[3]};
  }
  if (auto v = kr.count("bins", 1)) c.variogram_bins = *v;

  if (!c.featurize_seed_set) c.conv.seed = c.seed;
  c.eval.seed = c.seed;
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    config_error("cannot read config " + path.string() + ": " + e.what());
  }
  PipelineConfig c = parse_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
  c.source = path;
  return c;
}

void apply_environment(PipelineConfig& config) {
  if (const char* s = std::getenv("MVUQ_SEED"); s && *s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (*end != '\0') config_error(std::string("MVUQ_SEED is not an unsigned integer: ") + s);
    config.seed = v;
    config.eval.seed = v;
    if (!config.featurize_seed_set) config.conv.seed = v;
  }
}

Diagnostics validate(const PipelineConfig& c) {
  Diagnostics d;
  auto missing = [&](const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) {
      d.errors.push_back(what + " not found: " + p.string());
      return true;
    }
    return false;
  };
  std::optional<std::size_t> n;
  std::vector<std::string> available_views;

  if (!missing(c.targets, "targets file")) {
    // header line only
    std::ifstream in(c.targets);
    std::string header;
    std::getline(in, header);
    const auto t = table::parse_csv(header + "\n", c.targets.string());
    if (!t.has_column("location_id")) d.errors.push_back(c.targets.string() + ": missing column 'location_id'");
    if (!t.has_column(c.target_column)) {
      d.errors.push_back(c.targets.string() + ": missing column '" + c.target_column + "'");
    }
  }
  if (c.raster_dir && !missing(*c.raster_dir, "raster directory")) {
    const auto files = raster_files(*c.raster_dir);
    if (files.empty()) d.errors.push_back("no .btsr rasters in " + c.raster_dir->string());
    n = files.size();
    for (const auto& f : files) {
      if (missing(sidecar_path(f, ".bands.json"), "band sidecar")) continue;
      std::vector<std::string> labels;
      try {
        labels = sidecar_band_labels(f);
      } catch (const std::exception& e) {
        d.errors.push_back(f.string() + ": unreadable band sidecar: " + e.what());
        continue;
      }
      for (const auto& v : c.views) {
        const auto spec = raster::ViewSpec::parse(v);
        for (const auto& b : spec.triplet) {
          if (std::find(labels.begin(), labels.end(), b) == labels.end()) {
            d.errors.push_back(f.filename().string() + ": view " + spec.name + " needs band " + b +
                               " which the sidecar does not list");
          }
        }
      }
    }
    for (const auto& v : c.views) available_views.push_back(raster::ViewSpec::parse(v).name);
  }
  for (const auto& f : c.feature_files) {
    if (missing(f, "feature file")) continue;
    try {
      const auto [rows, cols] = fmx_shape(f);
      (void)cols;
      if (n && *n != rows) d.errors.push_back(f.string() + ": " + std::to_string(rows) + " rows, expected " + std::to_string(*n));
      n = rows;
      available_views.push_back(view_name_of(f));
    } catch (const std::exception& e) {
      d.errors.push_back(e.what());
    }
    if (!fs::exists(sidecar_path(f, ".manifest.json"))) {
      d.warnings.push_back(f.string() + ": no manifest sidecar; rows will be labelled by index");
    }
  }
  if (c.locations) missing(*c.locations, "locations file");
  if (c.krige && !c.raster_dir && !c.locations) {
    d.errors.push_back("[krige] needs coordinates: give [inputs] locations for imported features");
  }
  if (c.krige && std::find(c.models.begin(), c.models.end(), eval::method_from_string(c.krige_model)) == c.models.end()) {
    d.warnings.push_back("[krige] model " + c.krige_model + " is not in [models] list; it is fitted for kriging only");
  }
  if (available_views.size() > 1) available_views.emplace_back("fused");
  for (const auto& vs : c.view_sets) {
    std::string rest = vs;
    for (std::size_t pos; !rest.empty();) {
      pos = rest.find('+');
      const std::string part = rest.substr(0, pos);
      if (std::find(available_views.begin(), available_views.end(), part) == available_views.end()) {
        d.errors.push_back("[evaluate] view set '" + vs + "' references unknown view '" + part + "'");
      }
      rest = pos == std::string::npos ? "" : rest.substr(pos + 1);
    }
  }
  if (n && c.eval.folds > *n) {
    d.warnings.push_back("folds K=" + std::to_string(c.eval.folds) + " exceeds the " + std::to_string(*n) + " locations");
  }
  return d;
}

std::string provenance_json(const PipelineConfig& c) {
  nlohmann::ordered_json p;
  p["tool"] = "mvuq";
  p["version"] = kVersion;
  p["config_hash"] = "xxh64:" + hex64(XXH64(c.text.data(), c.text.size(), 0));
  p["seed"] = c.seed;
  p["featurize_seed"] = c.conv.seed;
  return p.dump();
}

RunResult run(const PipelineConfig& c) {
  if (c.jobs) set_max_jobs(*c.jobs);
  RunResult result;
  const fs::path out = c.output_dir;
  std::vector<features::FeatureMatrix> views;
  std::unordered_map<std::string, std::pair<double, double>> coords;

  stage("featurize", [&] {
    if (c.raster_dir) {
      std::vector<raster::BandRaster> rasters;
      std::vector<std::string> ids;
      for (const auto& f : raster_files(*c.raster_dir)) {
        rasters.push_back(raster::load_raster(f));
        ids.push_back(f.stem().string());
        coords[ids.back()] = {rasters.back().origin_lon, rasters.back().origin_lat};
      }
      if (rasters.empty()) throw Error(Errc::Io, "no rasters in " + c.raster_dir->string());
      for (std::size_t v = 0; v < c.views.size(); ++v) {
        const auto spec = raster::ViewSpec::parse(c.views[v]);
        std::vector<raster::ViewImage> images;
        images.reserve(rasters.size());
        for (const auto& r : rasters) images.push_back(raster::compose_view(r, spec));
        auto params = c.conv;
        params.seed = Rng::mix(c.conv.seed, v);  // independent filters per view
        const features::RandomConvFeaturizer fz(params, c.calibrate ? &images.front() : nullptr);
        auto fm = features::extract_features(images, ids, fz);
        features::FeatureMatrix named(fm.values(), fm.row_ids(), spec.name, fm.provenance());
        const auto path = out / "features" / (spec.name + ".fmx");
        features::save_features(path, named);
        result.artifacts.push_back(path);
        views.push_back(std::move(named));
      }
    } else {
      for (const auto& f : c.feature_files) {
        auto fm = features::import_features(f);
        const std::string name = view_name_of(f);
        views.emplace_back(fm.values(), fm.row_ids(), name, fm.provenance());
      }
      if (c.locations) {
        const auto t = table::read_csv(*c.locations);
        const auto ids = t.strings("location_id");
        const auto lon = t.numbers("lon");
        const auto lat = t.numbers("lat");
        for (std::size_t i = 0; i < ids.size(); ++i) coords[ids[i]] = {lon[i], lat[i]};
      }
    }
  });

  std::optional<features::FeatureMatrix> fused;
  stage("fuse", [&] {
    if (views.size() > 1) {
      fused = features::fuse_views(views);
      const auto path = out / "features" / "fused.fmx";
      if (c.raster_dir) {
        features::save_features(path, *fused);
        result.artifacts.push_back(path);
      }
    }
  });

  std::vector<double> y;
  stage("targets", [&] {
    const auto t = table::read_targets(c.targets, c.target_column);
    y = table::align_targets(t, views.front().row_ids());
  });

  auto lookup = [&](const std::string& name) -> features::FeatureMatrix {
    if (name == "fused") {
      if (!fused) throw Error(Errc::InvalidArgument, "view set 'fused' needs at least two views");
      return *fused;
    }
    if (name.find('+') != std::string::npos) {
      std::vector<features::FeatureMatrix> parts;
      std::string rest = name;
      while (!rest.empty()) {
        const auto pos = rest.find('+');
        const std::string part = rest.substr(0, pos);
        const auto it = std::find_if(views.begin(), views.end(), [&](const auto& v) { return v.view_name() == part; });
        if (it == views.end()) throw Error(Errc::InvalidArgument, "unknown view '" + part + "'");
        parts.push_back(*it);
        rest = pos == std::string::npos ? "" : rest.substr(pos + 1);
      }
      return features::fuse_views(parts);
    }
    const auto it = std::find_if(views.begin(), views.end(), [&](const auto& v) { return v.view_name() == name; });
    if (it == views.end()) throw Error(Errc::InvalidArgument, "unknown view '" + name + "'");
    return *it;
  };

  stage("evaluate", [&] {
    std::vector<eval::ViewSet> sets;
    if (c.view_sets.empty()) {
      for (const auto& v : views) sets.push_back({v.view_name(), v});
      if (fused) sets.push_back({"fused", *fused});
    } else {
      for (const auto& name : c.view_sets) sets.push_back({name, lookup(name)});
    }
    result.report = eval::evaluate(sets, y, c.eval);
    result.report_json = out / "report.json";
    result.report_csv = out / "report.csv";
    write_text_file(result.report_json, eval::report_json(result.report, provenance_json(c)));
    write_text_file(result.report_csv, eval::report_csv(result.report));
    result.artifacts.push_back(result.report_json);
    result.artifacts.push_back(result.report_csv);
  });

  if (c.krige) {
    stage("krige", [&] {
      const features::FeatureMatrix& fm = fused ? *fused : views.front();
      const auto st = features::ColumnStandardizer::fit(fm.values());
      const Eigen::MatrixXd x = c.eval.standardize ? st.apply(fm.values()) : fm.values();
      std::vector<PredictiveDistribution> preds;
      const auto method = eval::method_from_string(c.krige_model);
      if (method == eval::Method::Hetero) {
        auto h = c.eval.hetero;
        h.seed = c.seed;
        preds = hetero::predict_hetero(hetero::fit_hetero(x, y, h).model, x);
      } else if (method == eval::Method::BlrConjugate) {
        bayes::ConjugateOptions o;
        o.c = c.eval.blr_c;
        o.intercept_sd = c.eval.intercept_sd;
        o.sigma2 = c.eval.blr_sigma2.value_or(eval::estimate_sigma2(x, y, o.c, o.intercept_sd));
        preds = bayes::predict_blr(bayes::fit_blr_conjugate(x, y, o), x);
      } else {
        auto m = c.eval.mcmc;
        m.seed = c.seed;
        preds = bayes::predict_blr(bayes::fit_blr_mcmc(x, y, c.eval.prior, m), x, Rng::mix(c.seed, 7));
      }
      table::Table t;
      t.header = {"location_id", "lon", "lat", "target", "posterior_mean", "posterior_variance"};
      std::vector<double> lon, lat, value;
      for (std::size_t i = 0; i < fm.n(); ++i) {
        const auto& id = fm.row_ids()[i];
        const auto it = coords.find(id);
        if (it == coords.end()) throw Error(Errc::ManifestMismatch, "no coordinates for location '" + id + "'");
        lon.push_back(it->second.first);
        lat.push_back(it->second.second);
        const double v = c.krige_value == "target" ? y[i]
                         : c.krige_value == "posterior_variance" ? preds[i].variance()
                                                                 : preds[i].mean();
        value.push_back(v);
        t.rows.push_back({id, table::format_number(lon.back()), table::format_number(lat.back()),
                          table::format_number(y[i]), table::format_number(preds[i].mean()),
                          table::format_number(preds[i].variance())});
      }
      const auto pred_path = out / "predictions.csv";
      table::write_csv(pred_path, t);
      result.artifacts.push_back(pred_path);

      const auto field = geo::ScatterField::make(lon, lat, value, geo::field_kind_from_string(c.krige_value), fm.row_ids());
      const auto model = geo::fit_variogram(field, c.variogram_bins);
      geo::GridSpec grid;
      if (c.krige_bbox) {
        grid = {(*c.krige_bbox)[0], (*c.krige_bbox)[1], (*c.krige_bbox)[2], (*c.krige_bbox)[3], c.krige_res_km};
      } else {
        const auto [lo0, lo1] = std::minmax_element(field.lon.begin(), field.lon.end());
        const auto [la0, la1] = std::minmax_element(field.lat.begin(), field.lat.end());
        const double pad = 0.05 * std::max({*lo1 - *lo0, *la1 - *la0, 0.1});
        grid = {*lo0 - pad, *la0 - pad, *lo1 + pad, *la1 + pad, c.krige_res_km};
      }
      const auto kg = geo::krige(field, model, grid);
      const auto grid_path = out / "krige" / "grid.btsr";
      write_btsr(grid_path, geo::grid_to_tensor(kg));
      geo::write_heatmap(out / "krige" / "grid.png", kg);
      write_text_file(out / "krige" / "points.geojson", geo::markers_geojson(field));
      nlohmann::ordered_json vj{{"nugget", model.nugget},
                                {"sill", model.sill},
                                {"range_km", model.range_km},
                                {"degenerate", model.degenerate}};
      write_text_file(out / "krige" / "variogram.json", vj.dump(2) + "\n");
      for (const char* name : {"grid.btsr", "grid.png", "grid.legend.json", "points.geojson", "variogram.json"}) {
        result.artifacts.push_back(out / "krige" / name);
      }
    });
  }
  return result;
}

}  // namespace mvuq::pipeline
