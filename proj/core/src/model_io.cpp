#include "mvuq/model_io.hpp"

#include <json.hpp>

#include "mvuq/error.hpp"
#include "mvuq/tensor_io.hpp"

namespace mvuq::model_io {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class V>
std::vector<double> vec(const V& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd col(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::RowVectorXd row(const json& j) { return col(j).transpose(); }

}  // namespace

std::string to_json(const Model& model) {
  ordered_json j;
  if (const auto* r = std::get_if<regress::RidgeModel>(&model)) {
    j["kind"] = "ridge";
    j["w"] = vec(r->w);
    j["b"] = r->b;
    j["alpha"] = r->alpha;
    j["standardization"] = {{"column_means", vec(r->column_means)}, {"column_sds", vec(r->column_sds)}};
    j["target_mean"] = r->target_mean;
  } else if (const auto* h = std::get_if<hetero::HeteroModel>(&model)) {
    j["kind"] = "hetero";
    j["w_mu"] = vec(h->w_mu);
    j["b_mu"] = h->b_mu;
    j["w_s"] = vec(h->w_s);
    j["b_s"] = h->b_s;
    j["standardization"] = {{"column_means", vec(h->column_means)}, {"column_sds", vec(h->column_sds)}};
  } else {
    const auto& c = std::get<ConjugateModel>(model);
    j["kind"] = "blr_conjugate";
    j["mean"] = vec(c.posterior.mean);
    std::vector<std::vector<double>> cov;
    for (Eigen::Index i = 0; i < c.posterior.cov.rows(); ++i) cov.push_back(vec(Eigen::VectorXd(c.posterior.cov.row(i).transpose())));
    j["cov"] = cov;
    j["sigma2"] = c.posterior.sigma2;
    j["intercept"] = c.posterior.intercept;
    j["standardization"] = {{"column_means", vec(c.column_means)}, {"column_sds", vec(c.column_sds)}};
  }
  return j.dump(2) + "\n";
}

Model from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto kind = j.at("kind").get<std::string>();
    const auto& st = j.at("standardization");
    if (kind == "ridge") {
      regress::RidgeModel r;
      r.w = col(j.at("w"));
      r.b = j.at("b").get<double>();
      r.alpha = j.at("alpha").get<double>();
      r.column_means = row(st.at("column_means"));
      r.column_sds = row(st.at("column_sds"));
      r.target_mean = j.at("target_mean").get<double>();
      return r;
    }
    if (kind == "hetero") {
      hetero::HeteroModel h;
      h.w_mu = col(j.at("w_mu"));
      h.b_mu = j.at("b_mu").get<double>();
      h.w_s = col(j.at("w_s"));
      h.b_s = j.at("b_s").get<double>();
      h.column_means = row(st.at("column_means"));
      h.column_sds = row(st.at("column_sds"));
      return h;
    }
    if (kind == "blr_conjugate") {
      ConjugateModel c;
      c.posterior.mean = col(j.at("mean"));
      const auto rows = j.at("cov").get<std::vector<std::vector<double>>>();
      const auto p = static_cast<Eigen::Index>(rows.size());
      c.posterior.cov.resize(p, p);
      for (Eigen::Index i = 0; i < p; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != p) {
          throw Error(Errc::Format, "posterior covariance is not square");
        }
        for (Eigen::Index k = 0; k < p; ++k) c.posterior.cov(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      c.posterior.sigma2 = j.at("sigma2").get<double>();
      c.posterior.intercept = j.at("intercept").get<bool>();
      c.column_means = row(st.at("column_means"));
      c.column_sds = row(st.at("column_sds"));
      return c;
    }
    throw Error(Errc::Format, "unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(Errc::Format, std::string("model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& model) { write_text_file(path, to_json(model)); }

Model load_model(const std::filesystem::path& path) { return from_json(read_text_file(path)); }

}  // namespace mvuq::model_io
