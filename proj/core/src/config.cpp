#include "spcnn/config.hpp"

#include <fstream>
#include <string>

#include "spcnn/errors.hpp"

namespace spcnn {

void TrainConfig::validate() const {
  const auto fail = [](const std::string& m) { throw InvalidArgument("config: " + m); };
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (pool_window == 0 || pool_window % 2 == 0) fail("pool_window must be odd");
  if (!(prior_threshold >= 0.0 && prior_threshold <= 1.0)) {
    fail("prior_threshold must lie in [0, 1]");
  }
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay must lie in (0, 1]");
  if (lr_decay_every == 0) fail("lr_decay_every must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (!(grad_ceiling > 0.0)) fail("grad_ceiling must be > 0");
  if (depth == 0 || width == 0) fail("depth and width must be >= 1");
  if (shape_count == 0) fail("shape_count must be >= 1");
  if (shape_size < 8) fail("shape_size must be >= 8");
  if (patch == 0 || stride == 0) fail("patch and stride must be >= 1");
  if (!(canny.sigma > 0.0) || !(canny.low > 0.0) || !(canny.low < canny.high)) {
    fail("canny needs sigma > 0 and 0 < low < high");
  }
  if (!(val_threshold >= 0.0)) fail("val_threshold must be >= 0");
  if (nms_radius == 0) fail("nms_radius must be >= 1");
  if (!(golden_radius > 0.0)) fail("golden_radius must be > 0");
  if (threads == 0) fail("threads must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"pool_window", c.pool_window},
          {"prior_threshold", c.prior_threshold},
          {"weight_decay", c.weight_decay},
          {"lr", c.lr},
          {"lr_decay", c.lr_decay},
          {"lr_decay_every", c.lr_decay_every},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"grad_ceiling", c.grad_ceiling},
          {"seed", c.seed},
          {"depth", c.depth},
          {"width", c.width},
          {"shape_count", c.shape_count},
          {"shape_size", c.shape_size},
          {"shape_seed", c.shape_seed},
          {"patch", c.patch},
          {"stride", c.stride},
          {"canny_sigma", c.canny.sigma},
          {"canny_low", c.canny.low},
          {"canny_high", c.canny.high},
          {"canny_relative", c.canny.relative_thresholds},
          {"val_threshold", c.val_threshold},
          {"nms_radius", c.nms_radius},
          {"golden_radius", c.golden_radius},
          {"threads", c.threads}};
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "pool_window") c.pool_window = v.get<std::size_t>();
      else if (key == "prior_threshold") c.prior_threshold = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "lr_decay") c.lr_decay = v.get<double>();
      else if (key == "lr_decay_every") c.lr_decay_every = v.get<std::size_t>();
      else if (key == "momentum") c.momentum = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "grad_ceiling") c.grad_ceiling = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "depth") c.depth = v.get<std::size_t>();
      else if (key == "width") c.width = v.get<std::size_t>();
      else if (key == "shape_count") c.shape_count = v.get<std::size_t>();
      else if (key == "shape_size") c.shape_size = v.get<std::size_t>();
      else if (key == "shape_seed") c.shape_seed = v.get<std::uint64_t>();
      else if (key == "patch") c.patch = v.get<std::size_t>();
      else if (key == "stride") c.stride = v.get<std::size_t>();
      else if (key == "canny_sigma") c.canny.sigma = v.get<double>();
      else if (key == "canny_low") c.canny.low = v.get<double>();
      else if (key == "canny_high") c.canny.high = v.get<double>();
      else if (key == "canny_relative") c.canny.relative_thresholds = v.get<bool>();
      else if (key == "val_threshold") c.val_threshold = v.get<double>();
      else if (key == "nms_radius") c.nms_radius = v.get<std::size_t>();
      else if (key == "golden_radius") c.golden_radius = v.get<double>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw InvalidArgument("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return config_from_json(j, base);
}

}  // namespace spcnn
