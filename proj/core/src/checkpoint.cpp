#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "glassbuf/checkpoint.hpp"
#include "glassbuf/errors.hpp"

namespace glassbuf {

namespace {

constexpr char magic[] = "glassbuf-ckpt\n";
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& meta_json, const ParamSet& params) {
  nlohmann::json header;
  header["meta"]    = nlohmann::json::parse(meta_json.empty() ? "{}" : meta_json);
  header["tensors"] = nlohmann::json::array();
  for (auto& p : params.items()) header["tensors"].push_back({{"name", p.name}, {"shape", p.value.shape()}});
  auto text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << magic << text.size() << "\n" << text;
  for (auto& p : params.items())
    out.write(reinterpret_cast<const char*>(p.value.data()), std::streamsize(p.value.numel() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  if (line + "\n" != magic) throw ParseError(path.string() + ": not a glassbuf checkpoint");
  std::getline(in, line);
  std::size_t length = 0;
  try {
    length = std::stoull(line);
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": bad header length");
  }
  std::string text(length, '\0');
  in.read(text.data(), std::streamsize(length));
  if (!in) throw ParseError(path.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  Checkpoint ckpt;
  ckpt.meta_json = header.at("meta").dump();
  for (auto& t : header.at("tensors")) {
    Tensor value(t.at("shape").get<Shape>());
    in.read(reinterpret_cast<char*>(value.data()), std::streamsize(value.numel() * sizeof(float)));
    if (!in) throw ParseError(path.string() + ": truncated data for " + t.at("name").get<std::string>());
    ckpt.tensors.push_back({t.at("name").get<std::string>(), value});
  }
  return ckpt;
}

void assign_parameters(ParamSet& params, const Checkpoint& checkpoint) {
  for (auto& p : params.items()) {
    const Param* found = nullptr;
    for (auto& t : checkpoint.tensors)
      if (t.name == p.name) found = &t;
    if (!found) throw ValidationError("checkpoint lacks parameter " + p.name);
    if (found->value.shape() != p.value.shape())
      throw ShapeError("parameter " + p.name + ": checkpoint shape " + shape_string(found->value.shape()) +
                       " vs model " + shape_string(p.value.shape()));
    std::copy(found->value.data(), found->value.data() + found->value.numel(), p.value.data());
  }
}

}  // namespace glassbuf
