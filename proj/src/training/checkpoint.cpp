#include "forge/training/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "forge/common/errors.hpp"
#include "forge/common/hash.hpp"
#include "forge/common/io.hpp"
#include "json.hpp"

namespace forge::training {

namespace {

using json = nlohmann::ordered_json;

std::string encode_doubles(const std::vector<double>& values) {
  std::string out(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return out;
}

std::vector<double> decode_doubles(const std::string& bytes) {
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json scaler_json(const models::Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

models::Standardizer scaler_from(const nlohmann::json& j, std::size_t width, const char* name) {
  models::Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
  if (s.mean.size() != width || s.scale.size() != width) {
    throw IntegrityError(std::string("checkpoint ") + name + " has the wrong width");
  }
  return s;
}

}  // namespace

std::vector<double> checkpoint_weights(const Checkpoint& ckpt) {
  std::vector<double> blob;
  for (const auto& [name, net] : ckpt.bundle.subnets()) {
    const auto v = tensor::flatten_values(net->parameters());
    blob.insert(blob.end(), v.begin(), v.end());
  }
  if (ckpt.bundle.forest) {
    for (const auto& tree : ckpt.bundle.forest->trees()) {
      const auto v = tree.to_flat();
      blob.insert(blob.end(), v.begin(), v.end());
    }
  }
  return blob;
}

std::string manifest_json(const Checkpoint& ck, const std::string& weights_sha256, std::size_t weight_count) {
  const auto& b = ck.bundle;
  json m;
  m["format"] = "inverse-forge-checkpoint";
  m["version"] = ck.version;
  m["config"] = json::parse(config_to_json(ck.config));
  m["schema"] = {{"elements", ck.schema.elements},
                 {"labels", ck.schema.labels},
                 {"temperatures", ck.schema.temperatures}};
  m["arch"] = {{"target_width", b.arch.target_width},
               {"indicator_width", b.arch.indicator_width},
               {"design_width", b.arch.design_width},
               {"hidden", b.arch.hidden},
               {"latent_dim", b.arch.latent_dim},
               {"components", b.arch.components}};
  json subnets = json::array();
  std::size_t offset = 0;
  for (const auto& [name, net] : b.subnets()) {
    const auto count = tensor::parameter_count(net->parameters());
    subnets.push_back({{"name", name}, {"widths", net->widths()}, {"offset", offset}, {"count", count}});
    offset += count;
  }
  m["subnets"] = subnets;
  if (b.forest) {
    json trees = json::array();
    for (const auto& tree : b.forest->trees()) {
      const auto count = tree.to_flat().size();
      trees.push_back({{"offset", offset}, {"count", count}});
      offset += count;
    }
    m["forest"] = {{"feature_width", b.forest->feature_width()}, {"outputs", b.forest->outputs()}, {"trees", trees}};
  }
  m["input_scaler"] = scaler_json(b.input_scaler);
  m["design_scaler"] = scaler_json(b.design_scaler);
  m["design_log_offset"] = models::kDesignLogOffset;
  m["training_rows"] = ck.training_rows;
  json epochs = json::array();
  for (const auto& e : ck.log.epochs) epochs.push_back({e.epoch, e.objective, e.adversary});
  m["log"] = {{"stop_reason", ck.log.stop_reason}, {"epochs", epochs}};
  m["weights"] = {{"file", "weights.bin"}, {"count", weight_count}, {"sha256", weights_sha256}};
  return m.dump(2) + "\n";
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  const auto blob = encode_doubles(checkpoint_weights(ckpt));
  const auto sha = sha256_hex(blob);
  write_file(dir / "weights.bin", blob);
  write_file(dir / "manifest.json", manifest_json(ckpt, sha, blob.size() / 8));
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const std::string text = read_file(manifest_path);
  Checkpoint ck;
  try {
    const auto m = nlohmann::json::parse(text);
    const int version = m.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
    }
    ck.version = version;
    ck.config = config_from_json(m.at("config").dump());
    const auto& s = m.at("schema");
    ck.schema.elements = s.at("elements").get<std::vector<std::string>>();
    ck.schema.labels = s.at("labels").get<std::vector<std::string>>();
    ck.schema.temperatures = s.at("temperatures").get<std::vector<double>>();
    if (m.at("design_log_offset").get<double>() != models::kDesignLogOffset) {
      throw VersionError("checkpoint uses a different design transform");
    }

    const auto& a = m.at("arch");
    models::ArchConfig arch;
    arch.target_width = a.at("target_width").get<std::size_t>();
    arch.indicator_width = a.at("indicator_width").get<std::size_t>();
    arch.design_width = a.at("design_width").get<std::size_t>();
    arch.hidden = a.at("hidden").get<std::vector<std::size_t>>();
    arch.latent_dim = a.at("latent_dim").get<std::size_t>();
    arch.components = a.at("components").get<std::size_t>();
    ck.bundle = models::ModelBundle::create(ck.config.kind, arch, 0);
    ck.bundle.input_scaler = scaler_from(m.at("input_scaler"), arch.target_width, "input_scaler");
    ck.bundle.design_scaler = scaler_from(m.at("design_scaler"), arch.design_width, "design_scaler");
    ck.training_rows = m.at("training_rows").get<std::size_t>();
    ck.log.stop_reason = m.at("log").at("stop_reason").get<std::string>();
    for (const auto& e : m.at("log").at("epochs")) {
      ck.log.epochs.push_back({e.at(0).get<std::size_t>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }

    const auto& w = m.at("weights");
    const auto expected = w.at("count").get<std::size_t>();
    const std::string bytes = read_file(dir / w.at("file").get<std::string>());
    if (bytes.size() != expected * 8) {
      throw IntegrityError("weights.bin holds " + std::to_string(bytes.size()) + " bytes, manifest expects " +
                           std::to_string(expected * 8) + " (truncated or wrong file)");
    }
    if (sha256_hex(bytes) != w.at("sha256").get<std::string>()) {
      throw IntegrityError("weights.bin does not match the SHA-256 recorded in the manifest");
    }
    const auto blob = decode_doubles(bytes);

    const auto& listed = m.at("subnets");
    auto nets = ck.bundle.subnets();
    if (listed.size() != nets.size()) throw IntegrityError("checkpoint lists a different set of networks");
    for (std::size_t i = 0; i < nets.size(); ++i) {
      auto& [name, net] = nets[i];
      const auto& entry = listed.at(i);
      if (entry.at("name").get<std::string>() != name ||
          entry.at("widths").get<std::vector<std::size_t>>() != net->widths()) {
        throw IntegrityError("checkpoint network " + std::to_string(i) + " (" + entry.at("name").get<std::string>() +
                             ") does not match the architecture");
      }
      const auto offset = entry.at("offset").get<std::size_t>(), count = entry.at("count").get<std::size_t>();
      auto params = net->parameters();
      if (count != tensor::parameter_count(params) || offset + count > blob.size()) {
        throw IntegrityError("checkpoint network " + name + " has an inconsistent parameter count");
      }
      tensor::assign_values(params, std::span<const double>(blob).subspan(offset, count));
    }
    if (ck.bundle.forest && m.contains("forest")) {
      const auto& f = m.at("forest");
      std::vector<models::RegressionTree> trees;
      for (const auto& t : f.at("trees")) {
        const auto offset = t.at("offset").get<std::size_t>(), count = t.at("count").get<std::size_t>();
        if (offset + count > blob.size()) throw IntegrityError("checkpoint forest runs past the weight blob");
        trees.push_back(models::RegressionTree::from_flat(std::span<const double>(blob).subspan(offset, count)));
      }
      ck.bundle.forest->restore(f.at("feature_width").get<std::size_t>(), f.at("outputs").get<std::size_t>(),
                                std::move(trees));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  return ck;
}

}  // namespace forge::training
