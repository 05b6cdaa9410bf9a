// Module store: deterministic index over a parsed module library,
// dependency closure in canonical order, tf-idf text retrieval, and
// directory persistence.

#include "tpugen/store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tpugen/common.hpp"

namespace tpugen {
namespace {

const std::set<std::string>& stop_words() {
  static const std::set<std::string> kStop = {
      "a",  "an", "and",  "are", "as",   "at",  "by",  "for", "from", "in",
      "is", "it", "into", "of",  "on",   "or",  "per", "that", "the", "to",
      "with"};
  return kStop;
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw StoreError("cannot open '" + p.string() + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stop_words().count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else
      flush();
  }
  flush();
  // width mentions fuse into one token ("8-bit" -> "8bit") so they never
  // collide with bare parameter values like k=8
  std::vector<std::string> fused;
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool digits = !out[i].empty() &&
                  std::all_of(out[i].begin(), out[i].end(), [](char c) {
                    return std::isdigit(static_cast<unsigned char>(c));
                  });
    if (digits && i + 1 < out.size() && out[i + 1] == "bit") {
      fused.push_back(out[i] + "bit");
      ++i;
    } else {
      fused.push_back(out[i]);
    }
  }
  return fused;
}

u64 log2_q8(u64 n, u64 d) {
  if (d == 0 || n < d) throw StoreError("log2_q8 wants n >= d >= 1");
  u64 ip = 0;
  while (n >= 2 * d) {
    d *= 2;
    ++ip;
  }
  // n/d in [1,2) as Q32; square, renormalize with floor, peel one bit a time
  u128 r = (u128(n) << 32) / d;
  u64 frac = 0;
  for (int i = 0; i < 8; ++i) {
    r = (r * r) >> 32;
    frac <<= 1;
    if (r >= (u128(2) << 32)) {
      frac |= 1;
      r >>= 1;
    }
  }
  return (ip << 8) | frac;
}

StoreIndex build_index(const std::vector<StoreEntry>& entries) {
  StoreIndex idx;
  for (const auto& e : entries) {
    VerilogModule rederived = module_from_source(e.module.source);
    if (!(rederived == e.module))
      throw StoreError("record for '" + e.module.name +
                       "' disagrees with its own source");
    if (!idx.by_name.emplace(e.module.name, e).second)
      throw StoreError("duplicate module '" + e.module.name + "'");
  }

  // retrieval text is the name plus the description
  std::map<std::string, std::map<std::string, u64>> tf;
  for (const auto& [name, e] : idx.by_name) {
    auto& bag = tf[name];
    for (const auto& t : tokenize(name + " " + e.description)) bag[t] += 1;
  }
  for (const auto& [name, bag] : tf)
    for (const auto& [t, c] : bag) idx.term_index[t].push_back({name, c});

  // weights need document frequencies, hence the second pass
  u64 n = idx.by_name.size();
  for (const auto& [name, bag] : tf) {
    u64 norm2 = 0;
    for (const auto& [t, c] : bag) {
      u64 w = c * log2_q8(n, idx.term_index.at(t).size());
      norm2 += w * w;
    }
    idx.doc_norm2[name] = norm2;
  }

  std::string acc;
  for (const auto& [name, e] : idx.by_name)
    acc += name + "\n" + digest_hex(e.module.source) + "\n" + e.description +
           "\n";
  idx.digest = digest_hex(acc);
  return idx;
}

std::vector<std::string> parse_instantiations(const std::string& source) {
  std::set<std::string> types;
  for (const auto& m : parse_verilog(source))
    for (const auto& inst : m.insts)
      if (!is_verilog_primitive(inst.type_name)) types.insert(inst.type_name);
  return {types.begin(), types.end()};
}

std::vector<VerilogModule> ordered_closure(
    const std::function<const VerilogModule*(const std::string&)>& find,
    const VerilogModule& top) {
  std::vector<VerilogModule> out;
  std::set<std::string> done, path;
  std::function<void(const VerilogModule&)> visit = [&](const VerilogModule& m) {
    if (done.count(m.name)) return;
    if (!path.insert(m.name).second)
      throw StoreError("dependency cycle involving '" + m.name + "'");
    for (const auto& dep : m.deps) {  // already sorted unique
      if (done.count(dep)) continue;
      if (path.count(dep))
        throw StoreError("dependency cycle involving '" + dep + "'");
      const VerilogModule* d = find(dep);
      if (!d) throw MissingModule(dep);
      visit(*d);
    }
    path.erase(m.name);
    done.insert(m.name);
    out.push_back(m);
  };
  visit(top);
  return out;
}

std::vector<VerilogModule> resolve_closure(const StoreIndex& idx,
                                           const VerilogModule& top) {
  return ordered_closure(
      [&](const std::string& name) -> const VerilogModule* {
        auto it = idx.by_name.find(name);
        return it == idx.by_name.end() ? nullptr : &it->second.module;
      },
      top);
}

nlohmann::json project_manifest(const VerilogModule& top,
                                const std::vector<VerilogModule>& modules) {
  nlohmann::json mj;
  mj["project"] = top.name;
  mj["top"] = top.name;
  std::istringstream ss(top.source);
  std::string line;
  std::getline(ss, line);
  std::getline(ss, line);
  const std::string tag = "// TPUGEN ";
  if (line.rfind(tag, 0) == 0) {
    auto j = nlohmann::json::parse(line.substr(tag.size()), nullptr, false);
    if (!j.is_discarded()) mj["config"] = j;
  }
  nlohmann::json arr = nlohmann::json::array();
  std::string all;
  for (const auto& m : modules) {
    arr.push_back({{"name", m.name}, {"digest", digest_hex(m.source)}});
    all += m.source;
  }
  mj["modules"] = arr;
  mj["digest"] = digest_hex(all);
  return mj;
}

std::vector<RankedModule> retrieve_by_text(const StoreIndex& idx,
                                           const std::string& query, int k) {
  if (k < 1) throw StoreError("retrieval k must be >= 1");
  std::map<std::string, u64> qtf;
  for (const auto& t : tokenize(query)) qtf[t] += 1;

  u64 n = idx.by_name.size();
  std::map<std::string, u64> dot;
  u64 qnorm2 = 0;
  for (const auto& [t, qc] : qtf) {
    auto it = idx.term_index.find(t);
    if (it == idx.term_index.end()) continue;
    u64 idf = log2_q8(n, it->second.size());
    u64 qw = qc * idf;
    qnorm2 += qw * qw;
    for (const auto& p : it->second) dot[p.name] += qw * p.tf * idf;
  }

  std::vector<RankedModule> out;
  for (const auto& [name, dp] : dot) {
    if (dp == 0) continue;
    RankedModule r;
    r.name = name;
    r.dot = dp;
    r.doc_norm2 = idx.doc_norm2.at(name);
    r.score = static_cast<double>(dp) /
              std::sqrt(static_cast<double>(r.doc_norm2) *
                        static_cast<double>(qnorm2));
    out.push_back(std::move(r));
  }
  // cosine comparison with the square root cleared by cross-multiplying;
  // query norm is common to both sides and drops out
  std::sort(out.begin(), out.end(),
            [](const RankedModule& a, const RankedModule& b) {
              u128 lhs = u128(a.dot) * a.dot * b.doc_norm2;
              u128 rhs = u128(b.dot) * b.dot * a.doc_norm2;
              if (lhs != rhs) return lhs > rhs;
              return a.name < b.name;
            });
  if (static_cast<int>(out.size()) > k) out.resize(k);
  return out;
}

VerilogProject assemble_project(const StoreIndex& idx,
                                const VerilogModule& top) {
  VerilogProject p;
  p.top = top;
  p.modules = resolve_closure(idx, top);
  p.manifest = project_manifest(top, p.modules);
  return p;
}

void save_store(const StoreIndex& idx, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [name, e] : idx.by_name) {
    std::string file = name + ".v";
    std::ofstream os(fs::path(dir) / file, std::ios::binary);
    os << e.module.source;
    if (!os) throw StoreError("cannot write '" + file + "'");
    arr.push_back({{"name", name},
                   {"file", file},
                   {"description", e.description},
                   {"digest", digest_hex(e.module.source)}});
  }
  nlohmann::json sj;
  sj["modules"] = arr;
  sj["digest"] = idx.digest;
  std::ofstream os(fs::path(dir) / "store.json", std::ios::binary);
  os << sj.dump(2) << "\n";
  if (!os) throw StoreError("cannot write store.json");
}

StoreIndex load_store(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json sj =
      nlohmann::json::parse(read_text_file(fs::path(dir) / "store.json"),
                            nullptr, false);
  if (sj.is_discarded() || !sj.contains("modules"))
    throw StoreError("malformed store.json in '" + dir + "'");
  std::vector<StoreEntry> entries;
  for (const auto& rec : sj["modules"]) {
    std::string file = rec.at("file").get<std::string>();
    std::string src = read_text_file(fs::path(dir) / file);
    if (digest_hex(src) != rec.at("digest").get<std::string>())
      throw StoreError("digest mismatch for '" + file + "'");
    StoreEntry e;
    e.module = module_from_source(src);
    if (e.module.name != rec.at("name").get<std::string>())
      throw StoreError("'" + file + "' defines '" + e.module.name +
                       "' but store.json says '" +
                       rec.at("name").get<std::string>() + "'");
    e.description = rec.at("description").get<std::string>();
    entries.push_back(std::move(e));
  }
  StoreIndex idx = build_index(entries);
  if (sj.contains("digest") &&
      sj.at("digest").get<std::string>() != idx.digest)
    throw StoreError("store digest mismatch in '" + dir + "'");
  return idx;
}

void write_project(const VerilogProject& proj, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "rtl");
  auto put = [&](const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
    if (!os) throw StoreError("cannot write '" + p.string() + "'");
  };
  for (const auto& m : proj.modules)
    if (m.name != proj.top.name)
      put(fs::path(dir) / "rtl" / (m.name + ".v"), m.source);
  put(fs::path(dir) / "top.v", proj.top.source);
  put(fs::path(dir) / "manifest.json", proj.manifest.dump(2) + "\n");
}

VerilogProject read_project(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json mj = nlohmann::json::parse(
      read_text_file(fs::path(dir) / "manifest.json"), nullptr, false);
  if (mj.is_discarded() || !mj.contains("modules") || !mj.contains("top"))
    throw StoreError("malformed manifest.json in '" + dir + "'");
  std::string top_name = mj.at("top").get<std::string>();
  VerilogProject proj;
  for (const auto& rec : mj["modules"]) {
    std::string name = rec.at("name").get<std::string>();
    fs::path file = name == top_name ? fs::path(dir) / "top.v"
                                     : fs::path(dir) / "rtl" / (name + ".v");
    std::string src = read_text_file(file);
    if (digest_hex(src) != rec.at("digest").get<std::string>())
      throw StoreError("digest mismatch for '" + file.string() + "'");
    VerilogModule m = module_from_source(src);
    if (m.name != name)
      throw StoreError("'" + file.string() + "' defines '" + m.name +
                       "' but the manifest says '" + name + "'");
    proj.modules.push_back(std::move(m));
  }
  bool top_found = false;
  for (const auto& m : proj.modules)
    if (m.name == top_name) {
      proj.top = m;
      top_found = true;
    }
  if (!top_found)
    throw StoreError("manifest top '" + top_name + "' has no module");
  proj.manifest = project_manifest(proj.top, proj.modules);
  if (proj.manifest != mj)
    throw StoreError("manifest in '" + dir +
                     "' disagrees with the recomputed one");
  return proj;
}

}  // namespace tpugen
