// SPDX-License-Identifier: Apache-2.0

#include "topoledger/synth.h"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "topoledger/error.h"
#include "topoledger/rng.h"

namespace topoledger {
namespace {

constexpr std::string_view kModule = "synth";

using namespace std::string_view_literals;

constexpr std::array kHeads = {
    "assets"sv,       "liabilities"sv,  "equity"sv,        "revenue"sv,     "expenses"sv,
    "cash"sv,         "inventory"sv,    "receivables"sv,   "payables"sv,    "vehicles"sv,
    "equipment"sv,    "buildings"sv,    "land"sv,          "machinery"sv,   "furniture"sv,
    "fixtures"sv,     "investments"sv,  "loans"sv,         "deposits"sv,    "prepayments"sv,
    "accruals"sv,     "provisions"sv,   "wages"sv,         "salaries"sv,    "rent"sv,
    "insurance"sv,    "utilities"sv,    "taxes"sv,         "interest"sv,    "dividends"sv,
    "depreciation"sv, "amortisation"sv, "goodwill"sv,      "software"sv,    "patents"sv,
    "trademarks"sv,   "licences"sv,     "fees"sv,          "commissions"sv, "subscriptions"sv,
    "travel"sv,       "entertainment"sv,"advertising"sv,   "repairs"sv,     "maintenance"sv,
    "fuel"sv,         "postage"sv,      "stationery"sv,    "telephone"sv,   "training"sv,
    "pensions"sv,     "bonuses"sv,      "grants"sv,        "royalties"sv,   "sales"sv,
    "purchases"sv,    "discounts"sv,    "refunds"sv,       "overdrafts"sv,  "mortgages"sv,
    "leases"sv,       "debentures"sv,   "shares"sv,        "reserves"sv,    "capital"sv,
    "drawings"sv,     "donations"sv,    "penalties"sv,     "cleaning"sv,    "security"sv,
};

constexpr std::array kModifiers = {
    "fixed"sv,        "current"sv,      "long term"sv,     "short term"sv,  "trade"sv,
    "other"sv,        "accrued"sv,      "deferred"sv,      "prepaid"sv,     "office"sv,
    "motor"sv,        "staff"sv,        "director"sv,      "bank"sv,        "petty"sv,
    "foreign"sv,      "domestic"sv,     "operating"sv,     "administrative"sv, "professional"sv,
    "legal"sv,        "consulting"sv,   "marketing"sv,     "computer"sv,    "leasehold"sv,
    "freehold"sv,     "intangible"sv,   "tangible"sv,      "net"sv,         "gross"sv,
    "unpaid"sv,       "unrealised"sv,   "realised"sv,      "intercompany"sv,"secured"sv,
    "unsecured"sv,    "social"sv,       "corporation"sv,   "general"sv,     "retained"sv,
    "employee"sv,     "property"sv,     "plant"sv,         "research"sv,    "development"sv,
    "customer"sv,     "supplier"sv,     "group"sv,         "accumulated"sv, "contract"sv,
    "warranty"sv,     "freight"sv,      "import"sv,        "export"sv,      "vat"sv,
    "medical"sv,      "vehicle"sv,      "software"sv,      "training"sv,    "subcontractor"sv,
};

constexpr auto kSynonyms = std::to_array<std::pair<std::string_view, std::string_view>>({
    {"vehicles", "motor cars"},        {"payables", "creditors"},       {"receivables", "debtors"},
    {"inventory", "stock"},            {"revenue", "turnover"},         {"expenses", "costs"},
    {"equity", "net worth"},           {"wages", "pay"},                {"salaries", "remuneration"},
    {"buildings", "premises"},         {"land", "ground"},              {"machinery", "machines"},
    {"furniture", "furnishings"},      {"fixtures", "fittings"},        {"investments", "holdings"},
    {"loans", "borrowings"},           {"deposits", "advances"},        {"prepayments", "prepaid costs"},
    {"accruals", "accrued costs"},     {"provisions", "allowances"},    {"rent", "rental"},
    {"insurance", "cover"},            {"utilities", "energy"},         {"taxes", "duties"},
    {"interest", "finance charges"},   {"dividends", "distributions"},  {"depreciation", "write down"},
    {"amortisation", "amortization"},  {"goodwill", "acquisition premium"}, {"software", "applications"},
    {"patents", "intellectual property"}, {"licences", "licenses"},    {"fees", "charges"},
    {"commissions", "brokerage"},      {"subscriptions", "memberships"}, {"travel", "travelling"},
    {"entertainment", "hospitality"},  {"advertising", "promotion"},    {"repairs", "renewals"},
    {"maintenance", "upkeep"},         {"fuel", "petrol"},              {"postage", "courier"},
    {"stationery", "office supplies"}, {"telephone", "phone"},          {"training", "education"},
    {"pensions", "retirement"},        {"bonuses", "incentives"},       {"grants", "subsidies"},
    {"royalties", "licence income"},   {"sales", "income"},             {"purchases", "procurement"},
    {"discounts", "rebates"},          {"refunds", "reimbursements"},   {"overdrafts", "credit lines"},
    {"mortgages", "secured loans"},    {"leases", "hire purchase"},     {"debentures", "bonds"},
    {"shares", "stocks"},              {"reserves", "surplus"},         {"capital", "funds"},
    {"drawings", "withdrawals"},       {"donations", "charity"},        {"penalties", "fines"},
    {"cleaning", "janitorial"},        {"security", "guarding"},        {"fixed", "non current"},
    {"current", "short dated"},        {"trade", "commercial"},         {"other", "sundry"},
    {"accrued", "outstanding"},        {"deferred", "postponed"},       {"office", "admin"},
    {"motor", "automobile"},           {"staff", "personnel"},          {"director", "board"},
    {"bank", "banking"},               {"petty", "small"},              {"foreign", "overseas"},
    {"domestic", "local"},             {"operating", "operational"},    {"administrative", "overhead"},
    {"professional", "advisory"},      {"legal", "solicitors"},         {"consulting", "consultancy"},
    {"marketing", "publicity"},        {"computer", "it"},              {"leasehold", "leased"},
    {"freehold", "owned"},             {"unpaid", "owing"},             {"employee", "worker"},
    {"property", "real estate"},       {"research", "r and d"},         {"customer", "client"},
    {"supplier", "vendor"},            {"group", "affiliated"},         {"accumulated", "cumulative"},
    {"freight", "carriage"},           {"medical", "health"},           {"vehicle", "car"},
    {"subcontractor", "contractor"},
});

constexpr auto kAbbreviations = std::to_array<std::pair<std::string_view, std::string_view>>({
    {"accumulated", "accum"},    {"depreciation", "depn"},   {"account", "acct"},
    {"expenses", "exps"},        {"receivables", "recv"},    {"payables", "pybl"},
    {"administrative", "admin"}, {"insurance", "ins"},       {"equipment", "equip"},
    {"maintenance", "maint"},    {"professional", "prof"},   {"corporation", "corp"},
    {"director", "dir"},         {"development", "dev"},     {"subscriptions", "subs"},
    {"telephone", "tel"},        {"vehicles", "veh"},        {"investments", "invts"},
    {"amortisation", "amort"},   {"intercompany", "i/c"},    {"provisions", "provs"},
    {"prepayments", "prepay"},   {"liabilities", "liabs"},   {"salaries", "sals"},
    {"commissions", "comms"},    {"advertising", "advert"},  {"entertainment", "ent"},
    {"accruals", "accr"},        {"government", "govt"},     {"international", "intl"},
});

std::vector<std::string> to_strings(std::span<const std::string_view> views) {
  return {views.begin(), views.end()};
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    std::size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    words.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return words;
}

bool is_content_word(std::string_view word) {
  return std::any_of(word.begin(), word.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
  });
}

const std::unordered_map<std::string_view, std::string_view>& synonym_lookup() {
  static const auto* lookup = [] {
    auto* m = new std::unordered_map<std::string_view, std::string_view>();
    for (const auto& [a, b] : kSynonyms) {
      m->emplace(a, b);
      if (b.find(' ') == std::string_view::npos) m->emplace(b, a);
    }
    return m;
  }();
  return *lookup;
}

const std::unordered_map<std::string_view, std::string_view>& abbreviation_lookup() {
  static const auto* lookup = [] {
    auto* m = new std::unordered_map<std::string_view, std::string_view>();
    for (const auto& [a, b] : kAbbreviations) m->emplace(a, b);
    return m;
  }();
  return *lookup;
}

std::string abbreviate(const std::string& word) {
  const auto& table = abbreviation_lookup();
  if (auto it = table.find(word); it != table.end()) return std::string(it->second);
  if (word.size() > 5) return word.substr(0, 4);
  return word;
}

}  // namespace

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, kModule, what);
  };
  if (n_vertices < 2) bad("n_vertices must be at least 2");
  if (max_children < 1) bad("max_children must be at least 1");
  for (double p : {synonym_probability, drop_probability, abbreviation_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) bad("noise probabilities must lie in [0, 1]");
  }
  if (records_per_vertex < 1) bad("records_per_vertex must be at least 1");
  if (max_depth > 0) {
    // Capacity of a complete max_children-ary tree of that depth.
    std::size_t capacity = 1, level = 1;
    for (std::size_t d = 0; d < max_depth && capacity < n_vertices; ++d) {
      level *= max_children;
      capacity += level;
    }
    if (capacity < n_vertices) bad("max_children and max_depth cannot hold n_vertices");
  }
}

std::span<const std::string_view> default_heads() { return kHeads; }
std::span<const std::string_view> default_modifiers() { return kModifiers; }
std::span<const std::pair<std::string_view, std::string_view>> synonym_table() { return kSynonyms; }
std::span<const std::pair<std::string_view, std::string_view>> abbreviation_table() {
  return kAbbreviations;
}

CoaTree generate_coa(const SynthConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> heads = cfg.heads.empty() ? to_strings(kHeads) : cfg.heads;
  const std::vector<std::string> modifiers =
      cfg.modifiers.empty() && cfg.heads.empty() ? to_strings(kModifiers) : cfg.modifiers;

  // Every distinct bare head and modifier+head phrase.
  std::vector<std::string> terms;
  for (const std::string& h : heads) terms.push_back(h);
  for (const std::string& m : modifiers)
    for (const std::string& h : heads) terms.push_back(m + " " + h);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  if (terms.size() < cfg.n_vertices) {
    throw Error(ErrorCode::kInvalidArgument, kModule,
                "word pool yields " + std::to_string(terms.size()) + " unique terms but " +
                    std::to_string(cfg.n_vertices) + " vertices were requested");
  }
  Rng term_rng = derive_stream(cfg.seed, 1);
  shuffle(terms, term_rng);
  terms.resize(cfg.n_vertices);

  Rng shape_rng = derive_stream(cfg.seed, 0);
  std::vector<std::size_t> children(cfg.n_vertices, 0);
  std::vector<std::size_t> depth(cfg.n_vertices, 0);
  std::vector<std::size_t> open{0};
  std::vector<CoaNode> nodes;
  nodes.reserve(cfg.n_vertices);
  auto id_of = [](std::size_t i) { return "n" + std::to_string(i); };
  nodes.push_back({id_of(0), std::nullopt, terms[0]});
  for (std::size_t i = 1; i < cfg.n_vertices; ++i) {
    const std::size_t slot = uniform_index(shape_rng, open.size());
    const std::size_t parent = open[slot];
    nodes.push_back({id_of(i), id_of(parent), terms[parent] + " / " + terms[i]});
    if (++children[parent] == cfg.max_children) {
      open[slot] = open.back();
      open.pop_back();
    }
    depth[i] = depth[parent] + 1;
    if (cfg.max_depth == 0 || depth[i] < cfg.max_depth) open.push_back(i);
  }
  return CoaTree::build(cfg.config_id, nodes);
}

std::string perturb_label(std::string_view label, const SynthConfig& cfg, Rng& rng) {
  const std::vector<std::string> words = split_words(label);
  std::vector<std::string> kept;
  std::vector<std::size_t> content;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (is_content_word(words[i])) content.push_back(i);
  }

  bool any_content = false;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    if (!is_content_word(w)) {
      kept.push_back(w);
      continue;
    }
    // Draw all three decisions so the stream position is independent of the
    // probabilities' values.
    const double drop = uniform_unit(rng);
    const double swap = uniform_unit(rng);
    const double abbrev = uniform_unit(rng);
    if (drop < cfg.drop_probability) continue;
    std::string out = w;
    const auto& synonyms = synonym_lookup();
    if (auto it = synonyms.find(out); it != synonyms.end() && swap < cfg.synonym_probability) {
      out = std::string(it->second);
    } else if (abbrev < cfg.abbreviation_probability) {
      out = abbreviate(out);
    }
    kept.push_back(std::move(out));
    any_content = true;
  }
  if (!any_content) {
    kept.assign(1, words[content[uniform_index(rng, content.size())]]);
  }

  // Drop separators left dangling at either end or doubled up.
  std::string result;
  bool last_was_separator = true;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const bool sep = !is_content_word(kept[i]);
    if (sep && last_was_separator) continue;
    if (!result.empty()) result += ' ';
    result += kept[i];
    last_was_separator = sep;
  }
  if (last_was_separator && !result.empty()) {
    const std::size_t space = result.rfind(' ');
    result.erase(space == std::string::npos ? 0 : space);
  }
  return result;
}

std::vector<MappingRecord> generate_records(const CoaTree& tree, const SynthConfig& cfg) {
  cfg.validate();
  std::vector<MappingRecord> out;
  out.reserve(tree.size() * cfg.records_per_vertex);
  const std::uint64_t stream_seed = splitmix64(cfg.seed ^ 0x7265636f726473ULL);
  for (VertexIndex v = 0; v < tree.size(); ++v) {
    for (std::size_t r = 0; r < cfg.records_per_vertex; ++r) {
      Rng rng = derive_stream(stream_seed, static_cast<std::uint64_t>(v) * cfg.records_per_vertex + r);
      MappingRecord record;
      record.custom_description = perturb_label(tree.label(v), cfg, rng);
      record.config_id = tree.config_id();
      record.true_vertex = v;
      if (cfg.companies > 0) {
        record.company_id = "company-" + std::to_string(uniform_index(rng, cfg.companies));
      }
      out.push_back(std::move(record));
    }
  }
  return out;
}

SynthCorpus generate_corpus(const SynthConfig& cfg, std::size_t n_configs, std::uint64_t seed) {
  if (n_configs == 0) throw Error(ErrorCode::kInvalidArgument, kModule, "need at least one config");
  SynthCorpus corpus;
  for (std::size_t c = 0; c < n_configs; ++c) {
    SynthConfig one = cfg;
    one.config_id = "cfg" + std::to_string(c + 1);
    one.seed = splitmix64(seed + c);
    CoaTree tree = generate_coa(one);
    std::vector<MappingRecord> records = generate_records(tree, one);
    if (one.companies > 0) {
      for (MappingRecord& r : records) r.company_id = one.config_id + "-" + r.company_id;
    }
    corpus.records.insert(corpus.records.end(), records.begin(), records.end());
    corpus.catalog.add(std::move(tree));
  }
  return corpus;
}

}  // namespace topoledger
