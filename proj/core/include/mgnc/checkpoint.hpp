#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mgnc/errors.hpp"
#include "mgnc/model.hpp"
#include "mgnc/vocab.hpp"

#include <json.hpp>

namespace mgnc {

/// Versioned binary container: magic, a JSON header (shapes, vocabulary,
/// configuration), then all tensors as little-endian float64. Write->read
/// round-trips are bit-exact for double models.
struct Checkpoint {
  ModelParams<double> params;
  Vocabulary vocab;
  std::vector<int> heights;
  int maps_per_height = 0;
  double dropout_p = 0.5;
};

namespace detail {
inline void write_tensor(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}
inline void read_tensor(std::ifstream& in, std::vector<double>& v,
                        const std::string& path) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
    throw FormatError(path + ": truncated tensor payload");
}
}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'M', 'G', 'N', 'C',
                                             'C', 'K', 'P', '1'};

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json header;
  header["version"] = 1;
  header["activation"] = to_string(ck.params.act);
  header["heights"] = ck.heights;
  header["maps_per_height"] = ck.maps_per_height;
  header["dropout_p"] = ck.dropout_p;
  header["n_classes"] = ck.params.n_classes();
  header["vocab"] = ck.vocab.tokens();
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : ck.params.groups) {
    groups.push_back({{"name", g.name},
                      {"dim", g.dim},
                      {"trainable", g.trainable},
                      {"oov_count", g.oov_count}});
  }
  header["groups"] = groups;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = hs.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  for (const auto& g : ck.params.groups) detail::write_tensor(out, g.table.data);
  for (const auto& bank : ck.params.banks)
    for (const auto& row : bank.filters)
      for (const auto& f : row) {
        detail::write_tensor(out, f.w.data);
        out.write(reinterpret_cast<const char*>(&f.b), sizeof(double));
      }
  detail::write_tensor(out, ck.params.classifier.w.data);
  detail::write_tensor(out, ck.params.classifier.b);
  if (!out) throw FormatError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) ||
      !std::equal(magic, magic + 8, kCheckpointMagic))
    throw FormatError(path + ": bad checkpoint magic");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (in.gcount() != sizeof(len))
    throw FormatError(path + ": truncated header length");
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len))
    throw FormatError(path + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed header JSON: " + e.what());
  }

  Checkpoint ck;
  try {
    ck.heights = header.at("heights").get<std::vector<int>>();
    ck.maps_per_height = header.at("maps_per_height").get<int>();
    ck.dropout_p = header.at("dropout_p").get<double>();
    const std::string act = header.at("activation").get<std::string>();
    ck.params.act = act == "relu"  ? Activation::relu
                    : act == "tanh" ? Activation::tanh
                                    : Activation::identity;
    const auto vocab_tokens =
        header.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 1; i < vocab_tokens.size(); ++i)
      ck.vocab.add(vocab_tokens[i]);
    const int n_classes = header.at("n_classes").get<int>();

    std::vector<EmbeddingGroup<double>> groups;
    for (const auto& jg : header.at("groups")) {
      EmbeddingGroup<double> g;
      g.name = jg.at("name").get<std::string>();
      g.dim = jg.at("dim").get<std::size_t>();
      g.trainable = jg.at("trainable").get<bool>();
      g.oov_count = jg.at("oov_count").get<std::size_t>();
      g.table = Matrix<double>(ck.vocab.size(), g.dim);
      groups.push_back(std::move(g));
    }

    // Rebuild the parameter skeleton, then overwrite with stored tensors.
    Rng dummy(0);
    ck.params = init_model<double>(std::move(groups), ck.heights,
                                   ck.maps_per_height, n_classes,
                                   ck.params.act, dummy);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": incomplete header: " + e.what());
  }

  for (auto& g : ck.params.groups) detail::read_tensor(in, g.table.data, path);
  for (auto& bank : ck.params.banks)
    for (auto& row : bank.filters)
      for (auto& f : row) {
        detail::read_tensor(in, f.w.data, path);
        in.read(reinterpret_cast<char*>(&f.b), sizeof(double));
        if (in.gcount() != sizeof(double))
          throw FormatError(path + ": truncated filter bias");
      }
  detail::read_tensor(in, ck.params.classifier.w.data, path);
  detail::read_tensor(in, ck.params.classifier.b, path);
  return ck;
}

}  // namespace mgnc
