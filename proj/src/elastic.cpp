#include "qsda/elastic.hpp"

#include <set>

#include <json.hpp>

namespace qsda {

bool is_elastic(const Qsda& a) {
  for (const auto& [k, tgt] : a.delta)
    if (k.kids.size() == 1 && k.letter.is_blank() && tgt != k.kids[0])
      return false;
  return true;
}

void validate_elastic(const Eqsda& e) {
  validate(e.a);
  if (!is_elastic(e.a))
    throw AnalysisError("blank unary transition is not a self-loop");
}

namespace {

// States reachable from q over blank unary transitions, q included. The
// table is deterministic, so this walks a single chain until it leaves the
// table or closes a cycle.
const std::vector<StateId>& blank_closure(
    const Qsda& a, StateId q0, std::vector<std::vector<StateId>>& memo) {
  auto& m = memo[q0];
  if (m.empty()) {
    std::set<StateId> seen;
    StateId q = q0;
    while (seen.insert(q).second) {
      auto it = a.delta.find(TransKey{{q}, Letter::blank()});
      if (it == a.delta.end()) break;
      q = it->second;
    }
    m.assign(seen.begin(), seen.end());
  }
  return m;
}

}  // namespace

Eqsda elastify(const Qsda& a) {
  validate(a);

  // Closing every target under blank reachability and then determinizing
  // yields exactly the blank-free part of the construction; the blank
  // letter itself is handled below by looping on sets that contain a state
  // with an outgoing blank transition.
  NondetQsda n;
  n.env = a.env;
  n.nstates = a.nstates;
  n.type = a.type;
  n.fin = a.fin;
  std::vector<std::vector<StateId>> memo(a.nstates);
  std::vector<bool> has_blank(a.nstates, false);
  for (const auto& [k, tgt] : a.delta) {
    if (k.kids.size() == 1 && k.letter.is_blank()) {
      has_blank[k.kids[0]] = true;
      continue;
    }
    n.delta[k] = blank_closure(a, tgt, memo);
  }

  std::vector<std::vector<StateId>> sets;
  Qsda out = determinize(n, Combine::Join, &sets);
  for (StateId s = 0; s < (StateId)sets.size(); ++s)
    for (StateId q : sets[s])
      if (has_blank[q]) {
        out.delta[TransKey{{s}, Letter::blank()}] = s;
        break;
      }
  validate(out);

  Eqsda e{normalize(out)};
  validate_elastic(e);
  return e;
}

Eqsda ejoin(const Eqsda& a, const Eqsda& b) {
  return elastify(lattice_join(a.a, b.a));
}

std::string eqsda_to_json(const Eqsda& e) {
  auto j = nlohmann::json::parse(qsda_to_json(e.a));
  j["elastic"] = true;
  return j.dump(1);
}

Eqsda eqsda_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  if (!j.value("elastic", false))
    throw AnalysisError("input lacks the elastic marker");
  Eqsda e{qsda_from_json(text)};
  validate_elastic(e);
  return e;
}

}  // namespace qsda
