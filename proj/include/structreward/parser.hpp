#pragma once

// Deterministic parser from a controlled English caption grammar to an
// anchored StructuredCaption. Indefinite mentions ("a cup", "another cup")
// mint fresh instance ids; definite mentions ("the cup") bind the most
// recently mentioned instance of the head; "the second cup" binds instance 2
// directly. Finite verb clauses emit EventMentions; copular clauses emit
// attributes/relations only. The full grammar table lives in docs/grammar.md.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "structreward/caption.hpp"
#include "structreward/errors.hpp"

namespace structreward {

struct Lexicon {
  std::set<std::string> nouns;
  std::set<std::string> adjectives;
  std::map<std::string, int> verbs;  // lemma -> arity (1 or 2)
  std::set<std::string> prepositions;
  std::map<std::string, std::string> connectives;  // surface -> role
  std::map<std::string, std::string> irregular_lemmas;

  bool is_lemma(const std::string& w) const {
    return nouns.count(w) || adjectives.count(w) || verbs.count(w) || prepositions.count(w);
  }
};

struct Clause {
  int index = 0;
  std::vector<std::string> tokens;
  std::optional<std::string> connective;  // role: then | before | after | first | again
};

namespace grammar {

inline const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = {"a", "an", "the", "another", "is", "present", "and"};
  return words;
}

inline const std::vector<std::string>& ordinal_words() {
  static const std::vector<std::string> words = {
      "first", "second", "third",    "fourth",   "fifth",  "sixth",
      "seventh", "eighth", "ninth",  "tenth",    "eleventh", "twelfth"};
  return words;
}

inline std::string ordinal_word(int k) {
  const auto& words = ordinal_words();
  if (k < 1 || k > static_cast<int>(words.size()))
    throw MalformedClause("no ordinal word for instance " + std::to_string(k));
  return words[k - 1];
}

// 1-based instance index, or 0 when the token is not an ordinal.
inline int ordinal_index(const std::string& token) {
  const auto& words = ordinal_words();
  for (size_t i = 0; i < words.size(); ++i)
    if (words[i] == token) return static_cast<int>(i) + 1;
  return 0;
}

inline bool is_vowel_initial(const std::string& s) {
  if (s.empty()) return false;
  switch (s.front()) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    default: return false;
  }
}

}  // namespace grammar

// Validates the vocabulary invariants: the five vocabularies are pairwise
// disjoint, reserved grammar words stay out of content vocabularies, and
// every irregular surface maps into one vocabulary.
inline void validate_lexicon(const Lexicon& lex) {
  std::vector<std::pair<std::string, std::set<std::string>>> vocabularies;
  vocabularies.emplace_back("nouns", lex.nouns);
  vocabularies.emplace_back("adjectives", lex.adjectives);
  std::set<std::string> verb_lemmas;
  for (const auto& [v, arity] : lex.verbs) {
    if (arity != 1 && arity != 2)
      throw SchemaError("verb '" + v + "' must have arity 1 or 2");
    verb_lemmas.insert(v);
  }
  vocabularies.emplace_back("verbs", verb_lemmas);
  vocabularies.emplace_back("prepositions", lex.prepositions);
  std::set<std::string> connective_surfaces;
  for (const auto& [surface, role] : lex.connectives) {
    static const std::set<std::string> roles = {"then", "before", "after", "first", "again"};
    if (!roles.count(role))
      throw SchemaError("connective '" + surface + "' has unknown role '" + role + "'");
    connective_surfaces.insert(surface);
  }
  vocabularies.emplace_back("connectives", connective_surfaces);

  for (size_t i = 0; i < vocabularies.size(); ++i)
    for (size_t j = i + 1; j < vocabularies.size(); ++j)
      for (const auto& w : vocabularies[i].second)
        if (vocabularies[j].second.count(w))
          throw SchemaError("word '" + w + "' appears in both " + vocabularies[i].first +
                            " and " + vocabularies[j].first);

  for (size_t i = 0; i + 1 < vocabularies.size(); ++i)  // content vocabularies only
    for (const auto& w : vocabularies[i].second)
      if (grammar::reserved_words().count(w) || grammar::ordinal_index(w) > 0)
        throw SchemaError("word '" + w + "' is reserved by the grammar");

  for (const auto& [surface, lemma] : lex.irregular_lemmas)
    if (!lex.is_lemma(lemma))
      throw SchemaError("irregular surface '" + surface + "' maps to unknown lemma '" + lemma + "'");
}

// Sectioned plain-text lexicon: `[nouns] cup table` ... `[verbs] lift/2 sit/1`
// ... `[connectives] then=then` ... `[irregular] sat=sit`. '#' starts a comment.
inline Lexicon parse_lexicon(const std::string& text) {
  Lexicon lex;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      if (tok.front() == '[' && tok.back() == ']') {
        section = tok.substr(1, tok.size() - 2);
        static const std::set<std::string> known = {"nouns", "adjectives", "verbs",
                                                    "prepositions", "connectives", "irregular"};
        if (!known.count(section)) throw SchemaError("unknown lexicon section '" + section + "'");
        continue;
      }
      if (section.empty()) throw SchemaError("lexicon entry '" + tok + "' before any section");
      if (section == "nouns") {
        lex.nouns.insert(tok);
      } else if (section == "adjectives") {
        lex.adjectives.insert(tok);
      } else if (section == "verbs") {
        auto slash = tok.find('/');
        if (slash == std::string::npos)
          throw SchemaError("verb entry '" + tok + "' needs an arity, e.g. lift/2");
        lex.verbs[tok.substr(0, slash)] = std::stoi(tok.substr(slash + 1));
      } else if (section == "prepositions") {
        lex.prepositions.insert(tok);
      } else {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
          throw SchemaError("entry '" + tok + "' in [" + section + "] needs surface=target");
        if (section == "connectives")
          lex.connectives[tok.substr(0, eq)] = tok.substr(eq + 1);
        else
          lex.irregular_lemmas[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
    }
  }
  validate_lexicon(lex);
  return lex;
}

// Irregular table first, then suffix rules (-ies, -es, -s, -ing with
// consonant-doubling undo, -ed), else identity. A rule's output is accepted
// immediately when it lands on a lexicon lemma; otherwise later rules get a
// chance and the first applicable rewrite wins as a fallback.
inline std::string lemmatize(const std::string& surface, const Lexicon& lex) {
  if (auto it = lex.irregular_lemmas.find(surface); it != lex.irregular_lemmas.end())
    return it->second;
  if (lex.is_lemma(surface)) return surface;

  auto ends_with = [&](const char* suffix) {
    const size_t n = std::string(suffix).size();
    return surface.size() > n && surface.compare(surface.size() - n, n, suffix) == 0;
  };

  std::vector<std::string> candidates;
  if (ends_with("ies")) candidates.push_back(surface.substr(0, surface.size() - 3) + "y");
  if (ends_with("es")) candidates.push_back(surface.substr(0, surface.size() - 2));
  if (ends_with("s")) candidates.push_back(surface.substr(0, surface.size() - 1));
  if (ends_with("ing") && surface.size() >= 5) {
    std::string stem = surface.substr(0, surface.size() - 3);
    auto is_vowel = [](char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; };
    if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
        !is_vowel(stem.back()))
      candidates.push_back(stem.substr(0, stem.size() - 1));  // sitting -> sit
    candidates.push_back(stem);
  }
  if (ends_with("ed")) candidates.push_back(surface.substr(0, surface.size() - 2));

  for (const auto& c : candidates)
    if (lex.is_lemma(c)) return c;
  if (!candidates.empty()) return candidates.front();
  return surface;
}

// Third-person singular form used when rendering event clauses.
inline std::string third_person(const std::string& lemma) {
  auto ends_with = [&](const char* suffix) {
    const size_t n = std::string(suffix).size();
    return lemma.size() >= n && lemma.compare(lemma.size() - n, n, suffix) == 0;
  };
  auto is_vowel = [](char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; };
  if (ends_with("s") || ends_with("x") || ends_with("z") || ends_with("ch") || ends_with("sh") ||
      ends_with("o"))
    return lemma + "es";
  if (lemma.size() >= 2 && lemma.back() == 'y' && !is_vowel(lemma[lemma.size() - 2]))
    return lemma.substr(0, lemma.size() - 1) + "ies";
  return lemma + "s";
}

namespace detail {

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  };
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (c == '.' || c == ',' || c == '!' || c == '?') {
      flush();
      out.push_back(std::string(1, c));
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace detail

// Splits caption text into indexed clauses. Sentences split on terminators;
// ", then" / "and then" coordinate clauses inside a sentence; a leading
// connective is recorded on its clause and stripped, and a "before"/"after"
// clause ends at the next comma ("Before the man stands, the man sits.").
inline std::vector<Clause> segment(const std::string& text, const Lexicon& lex) {
  const auto tokens = detail::tokenize(text);
  if (tokens.empty()) throw EmptyInput("caption text is empty");

  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  for (const auto& t : tokens) {
    if (t == "." || t == "!" || t == "?") {
      if (!current.empty()) sentences.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(t);
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  if (sentences.empty()) throw EmptyInput("caption text has no clauses");

  auto connective_role = [&](const std::string& t) -> std::optional<std::string> {
    if (auto it = lex.connectives.find(t); it != lex.connectives.end()) return it->second;
    return std::nullopt;
  };

  std::vector<Clause> clauses;
  for (const auto& sentence : sentences) {
    // split on ", then" and "and then"
    std::vector<std::pair<std::vector<std::string>, std::optional<std::string>>> segments;
    std::vector<std::string> seg;
    std::optional<std::string> pending_connective;
    for (size_t i = 0; i < sentence.size(); ++i) {
      const bool comma_then = sentence[i] == "," && i + 1 < sentence.size() &&
                              connective_role(sentence[i + 1]) == "then";
      const bool and_then = sentence[i] == "and" && i + 1 < sentence.size() &&
                            connective_role(sentence[i + 1]) == "then";
      if (comma_then || and_then) {
        segments.emplace_back(std::move(seg), pending_connective);
        seg.clear();
        pending_connective = "then";
        ++i;  // skip the "then"
      } else {
        seg.push_back(sentence[i]);
      }
    }
    segments.emplace_back(std::move(seg), pending_connective);

    for (auto& [segment_tokens, inherited] : segments) {
      std::optional<std::string> connective = inherited;
      auto toks = segment_tokens;
      if (!toks.empty()) {
        if (auto role = connective_role(toks.front())) {
          if (connective)
            throw MalformedClause("clause carries two connectives");
          connective = role;
          toks.erase(toks.begin());
          if (!toks.empty() && toks.front() == ",") toks.erase(toks.begin());
        }
      }
      // "Before A, B" keeps both clauses in one sentence; the comma ends A.
      std::vector<std::string> tail;
      if (connective == "before" || connective == "after") {
        auto comma = std::find(toks.begin(), toks.end(), std::string(","));
        if (comma == toks.end())
          throw MalformedClause("'" + *connective + "' clause needs a comma-separated partner");
        tail.assign(comma + 1, toks.end());
        toks.erase(comma, toks.end());
      }
      if (toks.empty()) throw MalformedClause("empty clause");
      if (std::find(toks.begin(), toks.end(), std::string(",")) != toks.end())
        throw MalformedClause("unexpected comma inside a clause");
      clauses.push_back({static_cast<int>(clauses.size()), std::move(toks), connective});
      if (!tail.empty()) {
        if (std::find(tail.begin(), tail.end(), std::string(",")) != tail.end())
          throw MalformedClause("unexpected comma inside a clause");
        clauses.push_back({static_cast<int>(clauses.size()), std::move(tail), std::nullopt});
      }
    }
  }
  return clauses;
}

inline std::vector<Clause> segment(const std::string& text) {
  return segment(text, Lexicon{});
}

namespace detail {

struct ParseState {
  const Lexicon& lex;
  StructuredCaption caption;
  std::map<std::string, int> instance_counts;       // head -> highest k
  std::map<std::string, std::string> last_mention;  // head -> anchor
  std::map<std::string, int> event_counts;          // predicate -> highest j
  int next_order_index = 0;
};

enum class WordKind { Determiner, Ordinal, Adjective, Noun, Verb, Preposition, Is, Present, Unknown };

inline WordKind classify(const std::string& token, const std::string& lemma, const Lexicon& lex) {
  if (token == "a" || token == "an" || token == "the" || token == "another")
    return WordKind::Determiner;
  if (token == "is") return WordKind::Is;
  if (token == "present") return WordKind::Present;
  if (grammar::ordinal_index(token) > 0) return WordKind::Ordinal;
  if (lex.adjectives.count(lemma)) return WordKind::Adjective;
  if (lex.nouns.count(lemma)) return WordKind::Noun;
  if (lex.verbs.count(lemma)) return WordKind::Verb;
  if (lex.prepositions.count(lemma)) return WordKind::Preposition;
  return WordKind::Unknown;
}

// Parses one noun phrase starting at `pos` and resolves it to an anchor.
// A definite mention with no antecedent is an error in subject position;
// in object position it introduces the instance ("A cup is on the table."),
// since captions routinely predicate against scene-unique props.
inline std::string parse_np(ParseState& st, const std::vector<std::string>& tokens, size_t& pos,
                            int clause, bool subject_position) {
  if (pos >= tokens.size()) throw MalformedClause("expected a noun phrase");
  const std::string det = tokens[pos];
  if (det != "a" && det != "an" && det != "the" && det != "another")
    throw MalformedClause("expected a determiner, found '" + det + "'");
  ++pos;

  int ordinal = 0;
  if (det == "the" && pos < tokens.size()) {
    ordinal = grammar::ordinal_index(tokens[pos]);
    if (ordinal > 0) ++pos;
  }

  std::vector<std::string> modifiers;
  std::string head;
  while (pos < tokens.size()) {
    const std::string token = tokens[pos];
    const std::string lemma = lemmatize(token, st.lex);
    const WordKind kind = classify(token, lemma, st.lex);
    if (kind == WordKind::Adjective) {
      modifiers.push_back(lemma);
      ++pos;
    } else if (kind == WordKind::Noun) {
      head = lemma;
      ++pos;
      break;
    } else if (kind == WordKind::Unknown) {
      throw UnknownToken("word '" + token + "' is not in the lexicon");
    } else {
      throw MalformedClause("unexpected word '" + token + "' inside a noun phrase");
    }
  }
  if (head.empty()) throw MalformedClause("noun phrase is missing its noun");

  // The phrase field carries the bare head: mention adjectives become
  // AttributeUnits, and folding them into the phrase as well would count
  // the same evidence in both the object map and the attribute score.
  auto fresh_instance = [&] {
    const int k = ++st.instance_counts[head];
    const std::string anchor = head + "_" + std::to_string(k);
    st.caption.objects.push_back({anchor, head, head, clause});
    return anchor;
  };

  std::string anchor;
  if (det == "the") {
    if (ordinal > 0) {
      if (st.instance_counts[head] < ordinal)
        throw UnresolvedDefinite("'the " + grammar::ordinal_word(ordinal) + " " + head +
                                 "' names an instance that was never introduced");
      anchor = head + "_" + std::to_string(ordinal);
    } else {
      auto it = st.last_mention.find(head);
      if (it != st.last_mention.end())
        anchor = it->second;
      else if (subject_position)
        throw UnresolvedDefinite("'the " + head + "' has no antecedent");
      else
        anchor = fresh_instance();
    }
  } else {
    anchor = fresh_instance();
  }
  st.last_mention[head] = anchor;
  for (const auto& m : modifiers)
    st.caption.attributes.push_back({anchor, m, clause});
  return anchor;
}

// Parses one clause body (connective already stripped). Returns the id of
// the EventMention the clause emitted, if any.
inline std::optional<std::string> parse_clause_body(ParseState& st,
                                                    const std::vector<std::string>& tokens,
                                                    int clause) {
  size_t pos = 0;
  const std::string subject = parse_np(st, tokens, pos, clause, true);
  if (pos >= tokens.size()) throw MalformedClause("clause is missing its verb phrase");

  const std::string token = tokens[pos];
  const std::string lemma = lemmatize(token, st.lex);
  const WordKind kind = classify(token, lemma, st.lex);

  std::optional<std::string> event_id;
  if (kind == WordKind::Is) {
    ++pos;
    if (pos >= tokens.size()) throw MalformedClause("'is' needs a complement");
    const std::string comp = tokens[pos];
    const std::string comp_lemma = lemmatize(comp, st.lex);
    const WordKind comp_kind = classify(comp, comp_lemma, st.lex);
    if (comp_kind == WordKind::Present) {
      ++pos;  // presence clause: the mention itself is the content
    } else if (comp_kind == WordKind::Adjective) {
      st.caption.attributes.push_back({subject, comp_lemma, clause});
      ++pos;
    } else if (comp_kind == WordKind::Preposition) {
      ++pos;
      const std::string object = parse_np(st, tokens, pos, clause, false);
      st.caption.relations.push_back({subject, comp_lemma, object, clause});
    } else if (comp_kind == WordKind::Unknown) {
      throw UnknownToken("word '" + comp + "' is not in the lexicon");
    } else {
      throw MalformedClause("'is' cannot be followed by '" + comp + "'");
    }
  } else if (kind == WordKind::Verb) {
    ++pos;
    const int arity = st.lex.verbs.at(lemma);
    std::vector<std::string> participants = {subject};
    if (arity == 2) {
      const std::string object = parse_np(st, tokens, pos, clause, false);
      participants.push_back(object);
      st.caption.relations.push_back({subject, lemma, object, clause});
    }
    const int j = ++st.event_counts[lemma];
    EventMention e;
    e.id = lemma + "#" + std::to_string(j);
    e.predicate = lemma;
    e.participants = participants;
    e.clause = clause;
    e.order_index = st.next_order_index++;
    st.caption.events.push_back(e);
    event_id = e.id;
  } else if (kind == WordKind::Unknown) {
    throw UnknownToken("word '" + token + "' is not in the lexicon");
  } else {
    throw MalformedClause("expected a verb phrase, found '" + token + "'");
  }

  if (pos != tokens.size())
    throw MalformedClause("trailing words after the verb phrase: '" + tokens[pos] + "'");
  return event_id;
}

}  // namespace detail

// Parses a full caption. Deterministic: identical (text, lexicon) inputs
// yield value-identical captions. Errors carry the clause position.
inline StructuredCaption parse_caption(const std::string& text, const Lexicon& lex) {
  const auto clauses = segment(text, lex);

  detail::ParseState st{lex, {}, {}, {}, {}, 0};
  std::vector<std::optional<std::string>> clause_event(clauses.size());
  for (const auto& clause : clauses) {
    try {
      clause_event[clause.index] = detail::parse_clause_body(st, clause.tokens, clause.index);
    } catch (const UnknownToken& e) {
      throw UnknownToken("clause " + std::to_string(clause.index) + ": " + e.what());
    } catch (const UnresolvedDefinite& e) {
      throw UnresolvedDefinite("clause " + std::to_string(clause.index) + ": " + e.what());
    } catch (const MalformedClause& e) {
      throw MalformedClause("clause " + std::to_string(clause.index) + ": " + e.what());
    }
  }

  // connective semantics; plain narration order asserts nothing
  for (const auto& clause : clauses) {
    if (!clause.connective) continue;
    const auto& role = *clause.connective;
    const int i = clause.index;
    auto assert_order = [&](const std::optional<std::string>& before,
                            const std::optional<std::string>& after) {
      if (before && after && *before != *after)
        st.caption.orders.push_back({*before, *after, true});
    };
    if (role == "then") {
      if (i > 0) assert_order(clause_event[i - 1], clause_event[i]);
    } else if (role == "before") {
      // "Before A, B": A is this clause, B the next; B happens first.
      if (i + 1 < static_cast<int>(clauses.size()))
        assert_order(clause_event[i + 1], clause_event[i]);
    } else if (role == "after") {
      if (i + 1 < static_cast<int>(clauses.size()))
        assert_order(clause_event[i], clause_event[i + 1]);
    } else if (role == "first") {
      if (i + 1 < static_cast<int>(clauses.size()))
        assert_order(clause_event[i], clause_event[i + 1]);
    } else if (role == "again") {
      // repetition: order the most recent same-predicate, same-agent event
      // before this one
      if (clause_event[i]) {
        const EventMention* cur = st.caption.find_event(*clause_event[i]);
        const EventMention* prior = nullptr;
        for (const auto& e : st.caption.events)
          if (e.order_index < cur->order_index && e.predicate == cur->predicate &&
              !e.participants.empty() && !cur->participants.empty() &&
              e.participants.front() == cur->participants.front())
            if (!prior || e.order_index > prior->order_index) prior = &e;
        if (prior) st.caption.orders.push_back({prior->id, cur->id, true});
      }
    }
  }

  st.caption.source_text = text;
  st.caption.normalize();
  return st.caption;
}

}  // namespace structreward
