#include "artifacts.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace maxent_hjb::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 initialisation failed");
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {}

fs::path OutputSet::file(const std::string& name) {
  if (!fs::exists(dir_)) {
    fs::create_directories(dir_);
    created_dir_ = true;
  }
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
  return dir_ / name;
}

void OutputSet::write_json(const std::string& name, const nlohmann::ordered_json& doc) {
  std::ofstream os(file(name));
  if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
  os << doc.dump(2) << "\n";
}

std::vector<ManifestEntry> OutputSet::entries() const {
  std::vector<ManifestEntry> out;
  for (const auto& name : names_) {
    const fs::path p = dir_ / name;
    if (!fs::exists(p)) continue;
    out.push_back({name, sha256_file(p), fs::file_size(p)});
  }
  return out;
}

void OutputSet::discard() {
  std::error_code ec;
  for (const auto& name : names_) fs::remove(dir_ / name, ec);
  names_.clear();
  if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

bool verify_manifest(const fs::path& dir, std::string* problem) {
  auto fail = [&](const std::string& why) {
    if (problem) *problem = why;
    return false;
  };
  std::ifstream is(dir / "manifest.json");
  if (!is) return fail("no manifest.json in " + dir.string());
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const std::exception& e) {
    return fail(std::string("manifest.json does not parse: ") + e.what());
  }
  for (const auto& f : doc.at("files")) {
    const fs::path p = dir / f.at("path").get<std::string>();
    if (!fs::exists(p)) return fail(p.string() + " is missing");
    if (fs::file_size(p) != f.at("bytes").get<std::uintmax_t>()) return fail(p.string() + " changed size");
    if (sha256_file(p) != f.at("sha256").get<std::string>()) return fail(p.string() + " hash mismatch");
  }
  return true;
}

}  // namespace maxent_hjb::cli
