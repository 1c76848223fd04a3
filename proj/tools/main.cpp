// mvuq command line: one subcommand per pipeline stage plus `run`.
// Exit codes: 0 success, 1 stage/runtime failure, 2 configuration error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvuq/bayes.hpp"
#include "mvuq/diagnostics.hpp"
#include "mvuq/error.hpp"
#include "mvuq/evaluate.hpp"
#include "mvuq/features.hpp"
#include "mvuq/fmx.hpp"
#include "mvuq/hetero.hpp"
#include "mvuq/kriging.hpp"
#include "mvuq/model_io.hpp"
#include "mvuq/parallel.hpp"
#include "mvuq/pipeline.hpp"
#include "mvuq/random.hpp"
#include "mvuq/raster.hpp"
#include "mvuq/ridge.hpp"
#include "mvuq/synthetic.hpp"
#include "mvuq/table_io.hpp"

namespace fs = std::filesystem;
using namespace mvuq;

namespace {

constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::Config, what + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("MVUQ_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw Error(Errc::Config, std::string("MVUQ_SEED is not an unsigned integer: ") + s);
  return v;
}

// MVUQ_SEED wins over --seed, matching the config-file behaviour.
std::uint64_t effective_seed(std::uint64_t flag) { return env_seed().value_or(flag); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw Error(Errc::Config, what + " not found: " + p.string());
}

struct Supervised {
  features::FeatureMatrix x;
  std::vector<double> y;
};

Supervised load_supervised(const fs::path& features_path, const fs::path& targets_path, const std::string& column) {
  require_file(features_path, "feature file");
  require_file(targets_path, "targets file");
  auto x = features::import_features(features_path);
  auto y = table::align_targets(table::read_targets(targets_path, column), x.row_ids());
  return {std::move(x), std::move(y)};
}

std::string cv_report_json(const regress::CvReport& r) {
  nlohmann::ordered_json j;
  j["folds"] = r.folds;
  j["chosen_alpha"] = r.chosen_alpha;
  j["fold_mae"] = r.fold_mae;
  j["mae_mean"] = r.mae_mean;
  j["mae_se"] = r.mae_se;
  j["alphas"] = r.alphas;
  j["alpha_mean_mae"] = r.alpha_mean_mae;
  return j.dump(2) + "\n";
}

bool is_btsr(const fs::path& p) {
  const auto bytes = read_file_bytes(p);
  return bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "BTSR";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvuq: multi-view features, probabilistic regression and uncertainty scoring"};
  app.require_subcommand(1);
  std::size_t jobs = 0;
  app.add_option("--jobs", jobs, "Worker cap (overrides MVUQ_JOBS)")->check(CLI::PositiveNumber);

  // compose
  auto* compose = app.add_subcommand("compose", "Compose a 3-band view from a band raster");
  std::string c_input, c_view = "natural", c_out;
  compose->add_option("--input", c_input, "Band raster (BTSR)")->required();
  compose->add_option("--view", c_view, "natural|false_color|moisture|agriculture|custom:b1,b2,b3");
  compose->add_option("--out", c_out, "Output .btsr or .png")->required();

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Random-convolution features per view");
  std::string f_rasters, f_views = "natural,false_color,moisture,agriculture", f_out;
  std::size_t f_filters = 512, f_patch = 3, f_stride = 0;
  std::uint64_t f_seed = 0;
  bool f_no_calibrate = false;
  featurize->add_option("--rasters", f_rasters, "Directory of band rasters")->required();
  featurize->add_option("--views", f_views, "Comma-separated view list");
  featurize->add_option("--seed", f_seed, "Filter seed");
  featurize->add_option("--filters", f_filters, "Filters per view (features = 2 x filters)");
  featurize->add_option("--patch", f_patch, "Patch size in pixels");
  featurize->add_option("--stride", f_stride, "Patch stride (0 = patch size)");
  featurize->add_flag("--no-calibrate", f_no_calibrate, "Zero biases instead of median calibration");
  featurize->add_option("--out", f_out, "Output directory")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Concatenate per-view feature files");
  std::string u_inputs, u_out;
  fuse->add_option("--inputs", u_inputs, "Comma-separated FMX files")->required();
  fuse->add_option("--out", u_out, "Fused FMX")->required();

  // shared supervised options
  std::string s_features, s_targets, s_column = "target", s_out;
  std::uint64_t s_seed = 0;
  auto add_supervised = [&](CLI::App* sub) {
    sub->add_option("--features", s_features, "FMX feature file")->required();
    sub->add_option("--targets", s_targets, "Targets CSV (location_id,<column>)")->required();
    sub->add_option("--target-col", s_column, "Target column");
    sub->add_option("--seed", s_seed, "Seed");
    sub->add_option("--out", s_out, "Output path")->required();
  };

  auto* fit_ridge = app.add_subcommand("fit-ridge", "Cross-validated ridge regression");
  add_supervised(fit_ridge);
  std::string r_grid = "default", r_report;
  std::size_t r_folds = 5;
  bool r_standardize = false;
  fit_ridge->add_option("--grid", r_grid, "default or comma-separated penalties");
  fit_ridge->add_option("--folds", r_folds, "CV folds")->check(CLI::Range(2, 1 << 20));
  fit_ridge->add_flag("--standardize", r_standardize, "Standardize columns before the penalty");
  fit_ridge->add_option("--report", r_report, "CV report JSON");

  auto* fit_het = app.add_subcommand("fit-hetero", "Heteroscedastic Gaussian regression");
  add_supervised(fit_het);
  hetero::HeteroOptions h_opts;
  std::string h_pred;
  fit_het->add_option("--lr", h_opts.lr, "Adam step size");
  fit_het->add_option("--epochs", h_opts.epochs, "Maximum epochs");
  fit_het->add_option("--patience", h_opts.patience, "Early-stopping patience");
  fit_het->add_option("--predictions", h_pred, "In-sample predictive CSV (location_id,mu,var)");

  auto* fit_blr = app.add_subcommand("fit-blr", "Bayesian linear regression (MCMC or conjugate)");
  add_supervised(fit_blr);
  std::string b_prior = "half_t", b_diag;
  bayes::BlrPriorConfig b_cfg;
  bayes::McmcOptions b_mcmc;
  bool b_conjugate = false;
  double b_sigma2 = 0.0;
  fit_blr->add_option("--prior", b_prior, "gaussian_ridge|half_t|regularized_horseshoe");
  fit_blr->add_option("--nu", b_cfg.nu, "Local-scale degrees of freedom");
  fit_blr->add_option("--slab-scale", b_cfg.slab_scale, "Regularized horseshoe slab scale");
  fit_blr->add_option("--c", b_cfg.c, "Gaussian ridge prior variance");
  fit_blr->add_option("--intercept-sd", b_cfg.intercept_sd, "Intercept prior sd");
  fit_blr->add_option("--chains", b_mcmc.chains, "Chains");
  fit_blr->add_option("--draws", b_mcmc.draws, "Draws per chain including warm-up");
  fit_blr->add_option("--warmup", b_mcmc.warmup, "Warm-up draws per chain");
  fit_blr->add_option("--diag", b_diag, "Diagnostics JSON");
  fit_blr->add_flag("--conjugate", b_conjugate, "Closed-form Gaussian posterior (writes model JSON)");
  fit_blr->add_option("--sigma2", b_sigma2, "Fixed noise variance for --conjugate (default: EM estimate)");

  auto* predict = app.add_subcommand("predict", "Predict with a fitted model");
  std::string p_model, p_features, p_out, p_locations;
  std::uint64_t p_seed = 0;
  predict->add_option("--model", p_model, "Model JSON or posterior BTSR")->required();
  predict->add_option("--features", p_features, "FMX feature file")->required();
  predict->add_option("--out", p_out, "Predictions CSV")->required();
  predict->add_option("--seed", p_seed, "Seed for posterior predictive draws");
  predict->add_option("--locations", p_locations, "CSV with location_id,lon,lat to attach coordinates");

  auto* evaluate = app.add_subcommand("evaluate", "K-fold evaluation from a config");
  std::string e_config, e_out;
  evaluate->add_option("--config", e_config, "TOML config")->required();
  evaluate->add_option("--out", e_out, "Report JSON (CSV written alongside)");

  auto* krige = app.add_subcommand("krige", "Ordinary kriging of scattered values");
  std::string k_points, k_col = "posterior_mean", k_bbox, k_out, k_png, k_markers;
  double k_res = 1.0;
  std::size_t k_bins = 15;
  krige->add_option("--points", k_points, "CSV with lon,lat and the value column")->required();
  krige->add_option("--value-col", k_col, "Value column");
  krige->add_option("--bbox", k_bbox, "lon0,lat0,lon1,lat1 (default: data extent)");
  krige->add_option("--res-km", k_res, "Grid spacing in km")->check(CLI::PositiveNumber);
  krige->add_option("--bins", k_bins, "Variogram distance bins");
  krige->add_option("--out", k_out, "Grid BTSR (estimate, variance)")->required();
  krige->add_option("--png", k_png, "Heatmap PNG");
  krige->add_option("--markers", k_markers, "GeoJSON point overlay");

  auto* run = app.add_subcommand("run", "Run the full pipeline from a config");
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", run_config, "TOML config")->required();
  run->add_option("--out", run_out, "Output directory (overrides [run] output_dir)");
  run->add_option("--seed", run_seed, "Seed (overrides [run] seed; MVUQ_SEED wins)");

  auto* validate = app.add_subcommand("validate", "Check a config without reading payloads");
  std::string v_config;
  validate->add_option("--config", v_config, "TOML config")->required();

  auto* synth = app.add_subcommand("synth", "Write the planted multi-band synthetic dataset");
  synth::PlantedConfig sy;
  std::string sy_out;
  synth->add_option("--out", sy_out, "Output directory")->required();
  synth->add_option("--n", sy.n, "Locations");
  synth->add_option("--size", sy.width, "Image side in pixels");
  synth->add_option("--seed", sy.seed, "Seed");
  synth->add_option("--noise", sy.noise_sd, "Target noise sd");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (jobs > 0) set_max_jobs(jobs);

  try {
    if (compose->parsed()) {
      require_file(c_input, "raster");
      const auto spec = raster::ViewSpec::parse(c_view);
      const auto img = raster::compose_view(raster::load_raster(c_input), spec);
      if (fs::path(c_out).extension() == ".png") raster::save_view_png(c_out, img);
      else raster::save_view_btsr(c_out, img);
    } else if (featurize->parsed()) {
      require_file(f_rasters, "raster directory");
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(f_rasters)) {
        if (e.path().extension() == ".btsr") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw Error(Errc::Config, "no .btsr rasters in " + f_rasters);
      std::vector<raster::BandRaster> rasters;
      std::vector<std::string> ids;
      for (const auto& f : files) {
        rasters.push_back(raster::load_raster(f));
        ids.push_back(f.stem().string());
      }
      const auto views = split_list(f_views);
      const std::uint64_t seed = effective_seed(f_seed);
      for (std::size_t v = 0; v < views.size(); ++v) {
        const auto spec = raster::ViewSpec::parse(views[v]);
        std::vector<raster::ViewImage> images;
        for (const auto& r : rasters) images.push_back(raster::compose_view(r, spec));
        features::ConvParams params{f_filters, f_patch, f_stride, Rng::mix(seed, v)};
        const features::RandomConvFeaturizer fz(params, f_no_calibrate ? nullptr : &images.front());
        const auto fm = features::extract_features(images, ids, fz);
        features::save_features(fs::path(f_out) / (spec.name + ".fmx"),
                                features::FeatureMatrix(fm.values(), fm.row_ids(), spec.name, fm.provenance()));
      }
    } else if (fuse->parsed()) {
      std::vector<features::FeatureMatrix> parts;
      for (const auto& p : split_list(u_inputs)) {
        require_file(p, "feature file");
        auto fm = features::import_features(p);
        const auto man = sidecar_path(p, ".manifest.json");
        std::string name = fs::path(p).stem().string();
        if (fs::exists(man)) {
          const auto m = features::read_manifest(man);
          if (!m.view.empty()) name = m.view;
        }
        parts.emplace_back(fm.values(), fm.row_ids(), name, fm.provenance());
      }
      features::save_features(u_out, features::fuse_views(parts));
    } else if (fit_ridge->parsed()) {
      const auto d = load_supervised(s_features, s_targets, s_column);
      const auto grid = r_grid == "default" ? regress::default_alpha_grid() : parse_numbers(r_grid, "--grid");
      const auto cv = regress::fit_ridge_cv(d.x.values(), d.y, grid, r_folds, effective_seed(s_seed),
                                            regress::RidgeOptions{r_standardize});
      model_io::save_model(s_out, cv.model);
      if (!r_report.empty()) write_text_file(r_report, cv_report_json(cv.report));
      std::cout << "chosen alpha " << cv.report.chosen_alpha << ", CV MAE " << cv.report.mae_mean << " +/- "
                << cv.report.mae_se << "\n";
    } else if (fit_het->parsed()) {
      const auto d = load_supervised(s_features, s_targets, s_column);
      h_opts.seed = effective_seed(s_seed);
      const auto fit = hetero::fit_hetero(d.x.values(), d.y, h_opts);
      for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
      model_io::save_model(s_out, fit.model);
      if (!h_pred.empty()) {
        const auto preds = hetero::predict_hetero(fit.model, d.x.values());
        table::write_predictions(h_pred, d.x.row_ids(), preds);
      }
      std::cout << "best epoch " << fit.best_epoch << ", train NLL " << fit.best_nll << "\n";
    } else if (fit_blr->parsed()) {
      const auto d = load_supervised(s_features, s_targets, s_column);
      b_cfg.kind = bayes::prior_kind_from_string(b_prior);
      b_cfg.validate();
      if (b_conjugate) {
        const auto st = features::ColumnStandardizer::fit(d.x.values());
        const Eigen::MatrixXd xs = st.apply(d.x.values());
        bayes::ConjugateOptions o;
        o.c = b_cfg.c;
        o.intercept_sd = b_cfg.intercept_sd;
        o.sigma2 = b_sigma2 > 0.0 ? b_sigma2 : eval::estimate_sigma2(xs, d.y, o.c, o.intercept_sd);
        model_io::save_model(s_out, model_io::ConjugateModel{bayes::fit_blr_conjugate(xs, d.y, o), st.means(), st.sds()});
      } else {
        b_mcmc.seed = effective_seed(s_seed);
        const auto draws = bayes::fit_blr_mcmc(d.x.values(), d.y, b_cfg, b_mcmc);
        bayes::save_draws(s_out, draws);
        for (const auto& w : draws.warnings) std::cerr << "warning: " << w << "\n";
        if (!b_diag.empty()) write_text_file(b_diag, diagnostics::to_json(diagnostics::diagnose(draws)));
      }
    } else if (predict->parsed()) {
      require_file(p_model, "model");
      require_file(p_features, "feature file");
      const auto x = features::import_features(p_features);
      std::vector<PredictiveDistribution> preds;
      if (is_btsr(p_model)) {
        preds = bayes::predict_blr(bayes::load_draws(p_model), x.values(), effective_seed(p_seed));
      } else {
        const auto model = model_io::load_model(p_model);
        if (const auto* r = std::get_if<regress::RidgeModel>(&model)) {
          const Eigen::VectorXd mu = regress::predict(*r, x.values());
          table::Table t;
          t.header = {"location_id", "mu"};
          for (std::size_t i = 0; i < x.n(); ++i) t.rows.push_back({x.row_ids()[i], table::format_number(mu(static_cast<Eigen::Index>(i)))});
          table::write_csv(p_out, t);
          return 0;
        }
        if (const auto* h = std::get_if<hetero::HeteroModel>(&model)) {
          preds = hetero::predict_hetero(*h, x.values());
        } else {
          const auto& c = std::get<model_io::ConjugateModel>(model);
          const features::ColumnStandardizer st(c.column_means, c.column_sds);
          if (static_cast<std::size_t>(c.column_means.size()) != x.d()) {
            throw Error(Errc::DimensionMismatch, "model has " + std::to_string(c.column_means.size()) +
                                                     " features, input has " + std::to_string(x.d()));
          }
          preds = bayes::predict_blr(c.posterior, st.apply(x.values()));
        }
      }
      if (p_locations.empty()) {
        table::write_predictions(p_out, x.row_ids(), preds);
      } else {
        const auto loc = table::read_csv(p_locations);
        const auto ids = loc.strings("location_id");
        const auto lon = loc.numbers("lon");
        const auto lat = loc.numbers("lat");
        table::Targets lon_t{ids, lon}, lat_t{ids, lat};
        const auto lon_a = table::align_targets(lon_t, x.row_ids());
        const auto lat_a = table::align_targets(lat_t, x.row_ids());
        table::Table t;
        t.header = {"location_id", "lon", "lat", "posterior_mean", "posterior_variance"};
        for (std::size_t i = 0; i < x.n(); ++i) {
          t.rows.push_back({x.row_ids()[i], table::format_number(lon_a[i]), table::format_number(lat_a[i]),
                            table::format_number(preds[i].mean()), table::format_number(preds[i].variance())});
        }
        table::write_csv(p_out, t);
      }
    } else if (evaluate->parsed() || run->parsed()) {
      const std::string cfg_path = evaluate->parsed() ? e_config : run_config;
      auto cfg = pipeline::load_config(cfg_path);
      if (run_seed) {
        cfg.seed = *run_seed;
        cfg.eval.seed = *run_seed;
        if (!cfg.featurize_seed_set) cfg.conv.seed = *run_seed;
      }
      pipeline::apply_environment(cfg);
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (evaluate->parsed()) cfg.krige = false;
      if (jobs > 0) cfg.jobs = jobs;
      const auto diag = pipeline::validate(cfg);
      for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
      if (!diag.ok()) {
        for (const auto& e : diag.errors) std::cerr << "error: " << e << "\n";
        return kExitConfig;
      }
      const auto result = pipeline::run(cfg);
      if (evaluate->parsed() && !e_out.empty()) {
        fs::copy_file(result.report_json, e_out, fs::copy_options::overwrite_existing);
        fs::copy_file(result.report_csv, fs::path(e_out).replace_extension(".csv"), fs::copy_options::overwrite_existing);
      }
      std::cout << "report: " << result.report_json.string() << "\n";
    } else if (krige->parsed()) {
      require_file(k_points, "points file");
      const auto t = table::read_csv(k_points);
      const auto field = geo::ScatterField::make(t.numbers("lon"), t.numbers("lat"), t.numbers(k_col),
                                                 geo::field_kind_from_string(k_col),
                                                 t.has_column("location_id") ? t.strings("location_id")
                                                                             : std::vector<std::string>{});
      for (const auto& w : field.warnings) std::cerr << "warning: " << w << "\n";
      const auto model = geo::fit_variogram(field, k_bins);
      geo::GridSpec grid;
      if (!k_bbox.empty()) {
        const auto b = parse_numbers(k_bbox, "--bbox");
        if (b.size() != 4) throw Error(Errc::Config, "--bbox needs lon0,lat0,lon1,lat1");
        grid = {b[0], b[1], b[2], b[3], k_res};
      } else {
        const auto [lo0, lo1] = std::minmax_element(field.lon.begin(), field.lon.end());
        const auto [la0, la1] = std::minmax_element(field.lat.begin(), field.lat.end());
        grid = {*lo0, *la0, *lo1, *la1, k_res};
      }
      const auto kg = geo::krige(field, model, grid);
      write_btsr(k_out, geo::grid_to_tensor(kg));
      if (!k_png.empty()) geo::write_heatmap(k_png, kg);
      if (!k_markers.empty()) write_text_file(k_markers, geo::markers_geojson(field));
      std::cout << "variogram nugget " << model.nugget << " sill " << model.sill << " range_km " << model.range_km
                << (model.degenerate ? " (degenerate)" : "") << "\n";
    } else if (validate->parsed()) {
      const auto cfg = pipeline::load_config(v_config);
      const auto diag = pipeline::validate(cfg);
      for (const auto& w : diag.warnings) std::cout << "warning: " << w << "\n";
      for (const auto& e : diag.errors) std::cout << "error: " << e << "\n";
      if (!diag.ok()) return kExitConfig;
      std::cout << "ok\n";
    } else if (synth->parsed()) {
      sy.height = sy.width;
      sy.seed = effective_seed(sy.seed);
      synth::write_planted(sy_out, synth::make_planted(sy));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::Config ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
