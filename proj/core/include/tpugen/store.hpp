#pragma once

// Name-keyed module store with lexical retrieval: index a module library,
// pull instantiation names out of Verilog text, resolve dependency closures
// into a canonical order, and answer text queries with deterministic
// tf-idf cosine rankings.
//
// Ranking determinism: term weights are integers (tf times a Q8.8
// fixed-point log2 idf), and candidate order is decided by cross-multiplied
// exact integer comparison of squared cosines, so rankings are
// platform-independent; the floating-point score is display only.

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpugen/verilog.hpp"

namespace tpugen {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingModule : StoreError {
  std::string name;
  explicit MissingModule(const std::string& n)
      : StoreError("missing module '" + n + "'"), name(n) {}
};

struct StoreEntry {
  VerilogModule module;
  std::string description;
};

struct Posting {
  std::string name;  // document (module) name
  u64 tf = 0;        // raw term count in the document

  bool operator==(const Posting&) const = default;
};

struct StoreIndex {
  std::map<std::string, StoreEntry> by_name;
  std::map<std::string, std::vector<Posting>> term_index;  // postings by name
  std::map<std::string, u64> doc_norm2;  // sum of squared tf*idf weights
  std::string digest;                    // over names, sources, descriptions

  std::size_t size() const { return by_name.size(); }
};

// Lower-cased alphanumeric runs, stop words removed ("8-bit" -> {8, bit}).
std::vector<std::string> tokenize(const std::string& text);

// floor(256 * log2(n/d)) for n >= d >= 1, via iterated squaring in Q32
// fixed point with floor rounding at each step: exact at powers of two,
// within 1/256 elsewhere, bit-identical everywhere.
u64 log2_q8(u64 n, u64 d);

// Deterministic index over parsed modules plus their retrieval text.
// Rejects duplicate names and records whose fields disagree with their own
// source (re-derived through the parser).
StoreIndex build_index(const std::vector<StoreEntry>& entries);

// Instantiated module type names in the source (all modules if the text
// holds several), primitives excluded, sorted unique. Parse errors
// propagate as VerilogError.
std::vector<std::string> parse_instantiations(const std::string& source);

// Canonical dependency order: depth-first postorder over each module's
// sorted dep list, every module once, leaves first, top last. `find`
// returns null when a name is unknown -> MissingModule; instantiation
// cycles -> StoreError.
std::vector<VerilogModule> ordered_closure(
    const std::function<const VerilogModule*(const std::string&)>& find,
    const VerilogModule& top);

std::vector<VerilogModule> resolve_closure(const StoreIndex& idx,
                                           const VerilogModule& top);

// Manifest over an ordered module list: project/top name, per-module
// content digests, whole-project digest, and the parsed config header when
// the top carries one on line 2.
nlohmann::json project_manifest(const VerilogModule& top,
                                const std::vector<VerilogModule>& modules);

struct RankedModule {
  std::string name;
  u64 dot = 0;        // integer query x document weight product
  u64 doc_norm2 = 0;  // integer document weight norm squared
  double score = 0;   // cosine, for humans; never used to rank
};

// Top-k documents sharing at least one term with the query, by tf-idf
// cosine, ties broken lexicographically by name.
std::vector<RankedModule> retrieve_by_text(const StoreIndex& idx,
                                           const std::string& query, int k);

// Closure plus manifest; digest-identical to emit_project for tops that
// came out of the emitter.
VerilogProject assemble_project(const StoreIndex& idx,
                                const VerilogModule& top);

// Directory of <name>.v files plus store.json (name, file, description,
// digest per module). Loading re-parses every file and digest-checks it.
void save_store(const StoreIndex& idx, const std::string& dir);
StoreIndex load_store(const std::string& dir);

// Project layout on disk: <dir>/top.v, <dir>/rtl/<module>.v for everything
// below the top, <dir>/manifest.json. Reading digest-checks every file
// against the manifest and recomputes the manifest from the sources.
void write_project(const VerilogProject& proj, const std::string& dir);
VerilogProject read_project(const std::string& dir);

}  // namespace tpugen
