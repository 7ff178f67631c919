#pragma once

// The yes/no verification interface: a ground-truth world oracle for
// desk-scale runs, a caption-belief oracle for self-verification (answers
// from the world the generated caption asserts), and a line-delimited JSON
// wire client for external verifiers. Oracles answer from structured
// provenance slots, never from question text.

#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "structreward/errors.hpp"
#include "structreward/matching.hpp"
#include "structreward/questions.hpp"
#include "structreward/world.hpp"

namespace structreward {

enum class Answer { Yes, No };

inline const char* answer_name(Answer a) { return a == Answer::Yes ? "yes" : "no"; }

namespace detail {

// Optional slot translation: questions carry reference-side anchors; a
// belief oracle resolves them through the gen<->ref alignment first. A
// missing translation means the question's subject is simply absent from
// the answering world.
struct SlotTranslation {
  std::map<std::string, std::string> anchors;  // ref anchor -> target anchor
  std::map<std::string, std::string> events;   // ref event id -> target event id
};

inline std::optional<std::string> translate_anchor(const std::string& anchor,
                                                   const SlotTranslation* tr) {
  if (anchor.empty()) throw UnknownSlotAnchor("question provenance carries an empty anchor");
  if (!tr) return anchor;
  auto it = tr->anchors.find(anchor);
  if (it == tr->anchors.end()) return std::nullopt;
  return it->second;
}

inline std::optional<std::vector<std::string>> translate_binding(
    const std::vector<std::string>& participants, const SlotTranslation* tr) {
  std::vector<std::string> out;
  for (const auto& p : participants) {
    auto t = translate_anchor(p, tr);
    if (!t) return std::nullopt;
    out.push_back(*t);
  }
  return out;
}

// Candidate world events for one claimed endpoint. When the claim names an
// event id that exists in the answering world, the claim is pinned to that
// instance and must agree with it; otherwise the descriptor decides.
inline std::vector<const WorldEvent*> event_candidates(const WorldState& world,
                                                       const EventSlot& slot,
                                                       const SlotTranslation* tr) {
  auto binding = translate_binding(slot.participants, tr);
  if (!binding) return {};

  std::string id = slot.event_id;
  if (tr && !id.empty()) {
    auto it = tr->events.find(id);
    id = it == tr->events.end() ? std::string() : it->second;
  }
  if (!id.empty()) {
    if (const WorldEvent* e = world.find_event(id)) {
      if (e->predicate == slot.predicate && e->participants == *binding) return {e};
      return {};  // the named instance does not match the claim
    }
  }
  std::vector<const WorldEvent*> out;
  for (const auto& e : world.events)
    if (e.predicate == slot.predicate && e.participants == *binding) out.push_back(&e);
  return out;
}

inline Answer answer_against(const WorldState& world, const VerificationQuestion& q,
                             const SlotTranslation* tr) {
  const Provenance& p = q.provenance;
  switch (q.kind) {
    case QuestionKind::Existence: {
      if (p.head.empty()) throw UnknownSlotAnchor("existence question has no head slot");
      for (const auto& e : world.entities) {
        if (e.head != p.head) continue;
        bool all = true;
        for (const auto& m : p.modifiers) all = all && e.attributes.count(m) > 0;
        if (all) return Answer::Yes;
      }
      return Answer::No;
    }
    case QuestionKind::Attribute: {
      if (p.anchors.empty()) throw UnknownSlotAnchor("attribute question has no anchor slot");
      auto anchor = translate_anchor(p.anchors.front(), tr);
      if (!anchor) return Answer::No;
      const WorldEntity* e = world.find_entity(*anchor);
      if (!e) return Answer::No;  // absence dominates
      return e->attributes.count(p.value) ? Answer::Yes : Answer::No;
    }
    case QuestionKind::Relation: {
      if (p.anchors.size() < 2) throw UnknownSlotAnchor("relation question needs two anchors");
      auto s = translate_anchor(p.anchors[0], tr);
      auto o = translate_anchor(p.anchors[1], tr);
      if (!s || !o) return Answer::No;
      return world.has_relation(*s, p.predicate, *o) ? Answer::Yes : Answer::No;
    }
    case QuestionKind::EventOccurrence: {
      auto binding = translate_binding(p.event1.participants, tr);
      if (!binding) return Answer::No;
      for (const auto& e : world.events)
        if (e.predicate == p.event1.predicate && e.participants == *binding) return Answer::Yes;
      return Answer::No;
    }
    default: {  // temporal order
      const auto c1 = event_candidates(world, p.event1, tr);
      const auto c2 = event_candidates(world, p.event2, tr);
      for (const auto* a : c1)
        for (const auto* b : c2)
          if (a->id != b->id && a->time_index < b->time_index) return Answer::Yes;
      return Answer::No;
    }
  }
}

}  // namespace detail

// Ground-truth oracle: structured query against the closed world.
inline Answer oracle_answer(const WorldState& world, const VerificationQuestion& q) {
  return detail::answer_against(world, q, nullptr);
}

// Self-verification oracle: answers from the world implied by the generated
// caption. Reference-side slots are translated through the object map and
// event matching; anything the generated caption never aligned is absent
// from its belief.
class CaptionOracle {
public:
  CaptionOracle(const StructuredCaption& gen, const ObjectMap& map, const EventMatching& events)
      : belief_(implied_world(gen)) {
    for (const auto& [ref_id, gen_id] : map.reverse) translation_.anchors[ref_id] = gen_id;
    for (const auto& [ref_id, gen_id] : events.reverse) translation_.events[ref_id] = gen_id;
  }

  Answer answer(const VerificationQuestion& q) const {
    return detail::answer_against(belief_, q, &translation_);
  }

  const WorldState& belief() const { return belief_; }

private:
  WorldState belief_;
  detail::SlotTranslation translation_;
};

// Wire client: newline-delimited JSON over a stream socket. One request in
// flight per connection; responses are correlated by id.
class WireVerifier {
public:
  WireVerifier(std::string host, int port, double timeout_seconds = 5.0)
      : host_(std::move(host)), port_(port), timeout_ms_(static_cast<int>(timeout_seconds * 1000)) {}

  ~WireVerifier() { close_fd(); }

  WireVerifier(const WireVerifier&) = delete;
  WireVerifier& operator=(const WireVerifier&) = delete;

  Answer ask(const std::string& text) {
    if (fd_ < 0) connect_socket();
    const std::uint64_t id = next_id_++;
    nlohmann::json req = {{"id", id}, {"text", text}};
    std::string line = req.dump() + "\n";
    if (::send(fd_, line.data(), line.size(), 0) != static_cast<ssize_t>(line.size())) {
      close_fd();
      throw VerifierUnavailable("failed to send request to " + endpoint());
    }

    std::string response;
    while (true) {
      auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        response = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        break;
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, timeout_ms_);
      if (ready == 0) throw Timeout("verifier at " + endpoint() + " did not answer in time");
      if (ready < 0) throw VerifierUnavailable("poll failed for " + endpoint());
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n <= 0) {
        close_fd();
        throw VerifierUnavailable("connection to " + endpoint() + " closed");
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }

    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(response);
    } catch (const nlohmann::json::exception&) {
      throw MalformedResponse("verifier response is not valid JSON");
    }
    if (!doc.is_object() || !doc.contains("id") || !doc.contains("answer"))
      throw MalformedResponse("verifier response is missing id or answer");
    if (doc["id"].get<std::uint64_t>() != id)
      throw MalformedResponse("verifier response id does not match the request");
    const std::string answer = doc["answer"].get<std::string>();
    if (answer == "yes") return Answer::Yes;
    if (answer == "no") return Answer::No;
    throw MalformedResponse("verifier answer must be \"yes\" or \"no\"");
  }

private:
  std::string endpoint() const { return host_ + ":" + std::to_string(port_); }

  void connect_socket() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &result) != 0)
      throw VerifierUnavailable("cannot resolve " + endpoint());
    int fd = -1;
    for (addrinfo* rp = result; rp; rp = rp->ai_next) {
      fd = ::socket(rp->ai_family, rp->ai_socktype, rp->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, rp->ai_addr, rp->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) throw VerifierUnavailable("cannot connect to " + endpoint());
    fd_ = fd;
  }

  void close_fd() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  std::string host_;
  int port_ = 0;
  int timeout_ms_ = 5000;
  int fd_ = -1;
  std::uint64_t next_id_ = 1;
  std::string buffer_;
};

// Exactly one backing per binding: a ground-truth world, the generated
// caption's own belief (resolved inside the scorer), or an external wire
// endpoint.
class VerifierBinding {
public:
  enum class Kind { WorldOracle, SelfVerify, External };

  static VerifierBinding world_oracle(WorldState world) {
    VerifierBinding b;
    b.kind_ = Kind::WorldOracle;
    b.world_ = std::move(world);
    return b;
  }

  static VerifierBinding self_verify() {
    VerifierBinding b;
    b.kind_ = Kind::SelfVerify;
    return b;
  }

  static VerifierBinding external(std::string host, int port, double timeout_seconds = 5.0) {
    VerifierBinding b;
    b.kind_ = Kind::External;
    b.host_ = std::move(host);
    b.port_ = port;
    b.timeout_ = timeout_seconds;
    return b;
  }

  Kind kind() const { return kind_; }
  const WorldState& world() const { return *world_; }

  // Detached answering step; no side effects on any policy state.
  Answer answer(const VerificationQuestion& q) const {
    switch (kind_) {
      case Kind::WorldOracle:
        return oracle_answer(*world_, q);
      case Kind::SelfVerify:
        throw VerifierUnavailable(
            "self-verification resolves inside score_pair; it cannot answer standalone");
      default: {
        if (!wire_) wire_ = std::make_shared<WireVerifier>(host_, port_, timeout_);
        return wire_->ask(q.text);
      }
    }
  }

private:
  Kind kind_ = Kind::WorldOracle;
  std::optional<WorldState> world_;
  std::string host_;
  int port_ = 0;
  double timeout_ = 5.0;
  mutable std::shared_ptr<WireVerifier> wire_;
};

}  // namespace structreward
