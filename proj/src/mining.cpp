#include "stablerules/mining.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stablerules/csv.hpp"

namespace stablerules {

using json = nlohmann::json;

Item ItemCatalog::intern(const std::string& name) {
  if (name.find('\t') != std::string::npos || name.find(',') != std::string::npos ||
      name.find('\n') != std::string::npos) {
    throw InvalidValue("items: name '" + name + "' contains a reserved separator");
  }
  auto it = index.find(name);
  if (it != index.end()) return it->second;
  const Item id = static_cast<Item>(names.size());
  names.push_back(name);
  index.emplace(name, id);
  return id;
}

int ItemCatalog::find(const std::string& name) const {
  auto it = index.find(name);
  return it == index.end() ? -1 : it->second;
}

void TransactionDb::add(const std::vector<std::string>& items) {
  std::vector<Item> row;
  row.reserve(items.size());
  for (const auto& s : items) row.push_back(catalog.intern(s));
  std::sort(row.begin(), row.end());
  row.erase(std::unique(row.begin(), row.end()), row.end());
  rows.push_back(std::move(row));
}

namespace {

bool contains_sorted(const std::vector<Item>& row, const std::vector<Item>& sub) {
  return std::includes(row.begin(), row.end(), sub.begin(), sub.end());
}

int count_support(const std::vector<std::vector<Item>>& rows, const std::vector<Item>& set) {
  int c = 0;
  for (const auto& row : rows) {
    if (contains_sorted(row, set)) ++c;
  }
  return c;
}

}  // namespace

std::vector<Itemset> mine_frequent_itemsets(const TransactionDb& db, double min_support,
                                            int max_len) {
  if (db.rows.empty()) throw EmptyDatabase("mining: no transactions");
  if (!(min_support > 0.0) || min_support > 1.0) {
    throw InvalidValue("mining: min_support must lie in (0, 1]");
  }
  const int n = db.n();
  // smallest count c with c/n >= min_support, robust to representation error
  const int min_count = std::max(1, static_cast<int>(std::ceil(min_support * n - 1e-9)));

  std::vector<Itemset> out;
  // level 1
  std::vector<int> item_counts(db.catalog.names.size(), 0);
  for (const auto& row : db.rows) {
    for (Item it : row) ++item_counts[static_cast<size_t>(it)];
  }
  std::vector<std::vector<Item>> level;
  for (size_t it = 0; it < item_counts.size(); ++it) {
    if (item_counts[it] >= min_count) {
      level.push_back({static_cast<Item>(it)});
      out.push_back({{static_cast<Item>(it)}, item_counts[it],
                     static_cast<double>(item_counts[it]) / n});
    }
  }

  std::set<std::vector<Item>> frequent(level.begin(), level.end());
  int k = 1;
  while (!level.empty() && (max_len == 0 || k < max_len)) {
    ++k;
    // join step: pairs sharing the first k-2 items
    std::vector<std::vector<Item>> candidates;
    for (size_t a = 0; a < level.size(); ++a) {
      for (size_t b = a + 1; b < level.size(); ++b) {
        if (!std::equal(level[a].begin(), level[a].end() - 1, level[b].begin())) continue;
        std::vector<Item> cand = level[a];
        cand.push_back(level[b].back());
        if (cand[cand.size() - 2] > cand.back()) std::swap(cand[cand.size() - 2], cand.back());
        // prune: every (k-1)-subset must be frequent
        bool ok = true;
        std::vector<Item> sub(cand.begin(), cand.end() - 1);
        for (size_t drop = 0; drop < cand.size() && ok; ++drop) {
          sub.clear();
          for (size_t t = 0; t < cand.size(); ++t) {
            if (t != drop) sub.push_back(cand[t]);
          }
          ok = frequent.count(sub) > 0;
        }
        if (ok) candidates.push_back(std::move(cand));
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<std::vector<Item>> next;
    for (auto& cand : candidates) {
      const int c = count_support(db.rows, cand);
      if (c >= min_count) {
        out.push_back({cand, c, static_cast<double>(c) / n});
        frequent.insert(cand);
        next.push_back(std::move(cand));
      }
    }
    level = std::move(next);
  }
  return out;
}

std::vector<Rule> derive_rules(const std::vector<Itemset>& itemsets,
                               const ItemCatalog& catalog, double min_confidence,
                               Item consequent_item, int consequent_class) {
  if (!(min_confidence > 0.0) || min_confidence > 1.0) {
    throw InvalidValue("rules: min_confidence must lie in (0, 1]");
  }
  std::map<std::vector<Item>, const Itemset*> by_items;
  for (const auto& s : itemsets) by_items[s.items] = &s;

  const auto cons_it = by_items.find(std::vector<Item>{consequent_item});
  if (cons_it == by_items.end()) {
    throw MissingSupportEntry("rules: consequent itemset support missing");
  }
  const double sup_c = cons_it->second->support;

  std::vector<Rule> rules;
  for (const auto& s : itemsets) {
    if (s.items.size() < 2) continue;
    if (!std::binary_search(s.items.begin(), s.items.end(), consequent_item)) continue;
    std::vector<Item> ante;
    ante.reserve(s.items.size() - 1);
    for (Item it : s.items) {
      if (it != consequent_item) ante.push_back(it);
    }
    const auto ante_it = by_items.find(ante);
    if (ante_it == by_items.end()) {
      throw MissingSupportEntry("rules: antecedent support missing for a frequent itemset");
    }
    const double conf =
        static_cast<double>(s.count) / static_cast<double>(ante_it->second->count);
    if (conf + 1e-12 < min_confidence) continue;
    Rule r;
    r.antecedent.reserve(ante.size());
    for (Item it : ante) r.antecedent.push_back(catalog.name_of(it));
    std::sort(r.antecedent.begin(), r.antecedent.end());
    r.consequent = consequent_class;
    r.support = s.support;
    r.confidence = conf;
    r.lift = conf / sup_c;
    rules.push_back(std::move(r));
  }
  std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
    if (a.antecedent.size() != b.antecedent.size()) {
      return a.antecedent.size() < b.antecedent.size();
    }
    return a.antecedent < b.antecedent;
  });
  return rules;
}

RuleMatrix build_rule_matrix(const ValidatedDataset& ds, const std::vector<Rule>& rules,
                             ClassTag tag) {
  const Eigen::Index n = ds.n();
  const Eigen::Index p = ds.p();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double v = ds.features.values(i, j);
      if (v != 0.0 && v != 1.0) {
        throw InvalidValue("rule matrix: dataset must be one-hot encoded (0/1 entries)");
      }
    }
  }
  RuleMatrix rm;
  rm.rules = rules;
  rm.tag = tag;
  rm.values.setZero(n, static_cast<Eigen::Index>(rules.size()));
  for (size_t j = 0; j < rules.size(); ++j) {
    std::vector<int> cols;
    cols.reserve(rules[j].antecedent.size());
    for (const auto& name : rules[j].antecedent) {
      const int c = ds.features.column_index(name);
      if (c < 0) throw UnknownItem("rule matrix: item '" + name + "' not in dataset");
      cols.push_back(c);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      bool all = true;
      for (int c : cols) {
        if (ds.features.values(i, c) != 1.0) { all = false; break; }
      }
      if (all) rm.values(i, static_cast<Eigen::Index>(j)) = 1.0;
    }
  }
  return rm;
}

std::string class_item_name(int consequent_class) {
  return consequent_class > 0 ? "class=+1" : "class=-1";
}

TransactionDb transactions_from_dataset(const ValidatedDataset& ds, bool with_class_items) {
  TransactionDb db;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    std::vector<std::string> items;
    for (Eigen::Index j = 0; j < ds.p(); ++j) {
      const double v = ds.features.values(i, j);
      if (v == 1.0) {
        items.push_back(ds.features.column_names[static_cast<size_t>(j)]);
      } else if (v != 0.0) {
        throw InvalidValue("transactions: dataset must be one-hot encoded");
      }
    }
    if (with_class_items) {
      items.push_back(class_item_name(ds.labels.values[i] > 0 ? 1 : -1));
    }
    db.add(items);
  }
  return db;
}

Rule restat_rule(const std::vector<std::string>& antecedent, int consequent_class,
                 const ValidatedDataset& ds) {
  std::vector<int> cols;
  cols.reserve(antecedent.size());
  for (const auto& name : antecedent) {
    const int c = ds.features.column_index(name);
    if (c < 0) throw UnknownItem("restat: item '" + name + "' not in dataset");
    cols.push_back(c);
  }
  const Eigen::Index n = ds.n();
  int n_a = 0, n_ac = 0, n_c = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool is_class = (ds.labels.values[i] > 0 ? 1 : -1) == consequent_class;
    if (is_class) ++n_c;
    bool all = true;
    for (int c : cols) {
      if (ds.features.values(i, c) != 1.0) { all = false; break; }
    }
    if (all) {
      ++n_a;
      if (is_class) ++n_ac;
    }
  }
  Rule r;
  r.antecedent = antecedent;
  std::sort(r.antecedent.begin(), r.antecedent.end());
  r.consequent = consequent_class;
  r.support = static_cast<double>(n_ac) / static_cast<double>(n);
  r.confidence = n_a > 0 ? static_cast<double>(n_ac) / n_a : 0.0;
  const double base = static_cast<double>(n_c) / static_cast<double>(n);
  r.lift = base > 0 ? r.confidence / base : 0.0;
  return r;
}

std::string rules_to_text(const std::vector<Rule>& rules) {
  std::ostringstream out;
  for (const auto& r : rules) {
    for (size_t i = 0; i < r.antecedent.size(); ++i) {
      if (i) out << ',';
      out << r.antecedent[i];
    }
    out << '\t' << (r.consequent > 0 ? "+1" : "-1") << '\t' << format_double(r.support)
        << '\t' << format_double(r.confidence) << '\t' << format_double(r.lift) << '\n';
  }
  return out.str();
}

std::vector<Rule> rules_from_text(const std::string& text) {
  std::vector<Rule> rules;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 5) {
      throw ParseError("rules: line " + std::to_string(lineno) + " has " +
                       std::to_string(fields.size()) + " fields, expected 5");
    }
    Rule r;
    start = 0;
    const std::string& ante = fields[0];
    while (start < ante.size()) {
      const size_t comma = ante.find(',', start);
      r.antecedent.push_back(ante.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (r.antecedent.empty()) {
      throw ParseError("rules: line " + std::to_string(lineno) + " has empty antecedent");
    }
    r.consequent = fields[1] == "+1" || fields[1] == "1" ? 1 : -1;
    bool ok = true, all_ok = true;
    r.support = parse_double(fields[2], &ok); all_ok &= ok;
    r.confidence = parse_double(fields[3], &ok); all_ok &= ok;
    r.lift = parse_double(fields[4], &ok); all_ok &= ok;
    if (!all_ok) {
      throw ParseError("rules: line " + std::to_string(lineno) + " has a bad number");
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

std::string rules_to_json(const std::vector<Rule>& rules) {
  json arr = json::array();
  for (const auto& r : rules) {
    arr.push_back({{"antecedent", r.antecedent},
                   {"consequent", r.consequent},
                   {"support", r.support},
                   {"confidence", r.confidence},
                   {"lift", r.lift}});
  }
  return arr.dump(2);
}

}  // namespace stablerules
