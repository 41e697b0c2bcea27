#include "synthcse/synth/generator.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "synthcse/common/hash.hpp"
#include "synthcse/common/rng.hpp"
#include "synthcse/common/text.hpp"
#include "synthcse/synth/toy_language.hpp"

namespace synthcse::synth {

using nlohmann::json;

json to_wire(const GenerationRequest& r) {
  return {{"prompt", r.prompt}, {"max_tokens", r.max_tokens}, {"temperature", r.temperature}, {"seed", r.seed}};
}

GenerationRequest request_from_wire(const json& j) {
  GenerationRequest r;
  r.prompt = j.at("prompt").get<std::string>();
  r.max_tokens = j.value("max_tokens", r.max_tokens);
  r.temperature = j.value("temperature", r.temperature);
  r.seed = j.value("seed", r.seed);
  return r;
}

json to_wire(const GenerationResponse& r) { return {{"text", r.text}}; }

GenerationResponse response_from_wire(const json& j) { return {j.at("text").get<std::string>()}; }

std::string_view mock_mode_name(MockMode mode) {
  return mode == MockMode::kParaphrase ? "paraphrase" : "lazy_negation";
}

MockMode parse_mock_mode(std::string_view name) {
  if (name == "paraphrase") return MockMode::kParaphrase;
  if (name == "lazy_negation" || name == "lazy-negation") return MockMode::kLazyNegation;
  throw std::invalid_argument("unknown mock mode '" + std::string(name) + "'");
}

std::string extract_anchor(std::string_view prompt) {
  constexpr std::string_view kMarker = "Premise: ";
  const std::size_t at = prompt.rfind(kMarker);
  std::string_view anchor = at == std::string_view::npos ? prompt : prompt.substr(at + kMarker.size());
  if (!anchor.empty() && anchor.back() == '.') anchor.remove_suffix(1);
  return std::string(anchor);
}

KindHint detect_kind(std::string_view prompt) {
  std::string_view head = prompt;
  const std::size_t at = prompt.rfind("Premise: ");
  if (at != std::string_view::npos) head = prompt.substr(0, at);
  const std::size_t para = head.rfind("\n\n");
  if (para != std::string_view::npos) head = head.substr(para + 2);
  const std::string lower = to_lower_ascii(head);
  const bool ent = lower.find("entailment") != std::string::npos;
  const bool con = lower.find("contradiction") != std::string::npos;
  if (ent && con) return KindHint::kCombined;
  if (con) return KindHint::kNegative;
  return KindHint::kPositive;
}

namespace {

using toy::Slot;

struct Token {
  std::string text;
  std::optional<toy::WordInfo> info;
};

std::vector<Token> analyse(std::string_view anchor) {
  std::vector<Token> out;
  for (std::string& w : word_tokens(anchor)) {
    auto info = toy::lookup(w);
    out.push_back({std::move(w), info});
  }
  return out;
}

std::string render(const std::vector<Token>& tokens) {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const Token& t : tokens) words.push_back(t.text);
  return join(words, " ");
}

void set_form(Token& t, Slot slot, int sense, int form) {
  const auto& forms = toy::forms(slot, sense);
  t.text = forms[static_cast<std::size_t>(form) % forms.size()];
  t.info = toy::WordInfo{slot, sense, form};
}

void swap_synonym(Token& t) { set_form(t, t.info->slot, t.info->sense, t.info->form + 1); }

std::vector<std::size_t> lexicon_positions(const std::vector<Token>& tokens) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].info) pos.push_back(i);
  }
  return pos;
}

// Moves a trailing "in the X" to the front, or a leading one to the back.
bool reorder(std::vector<Token>& tokens) {
  const std::size_t n = tokens.size();
  if (n >= 4 && tokens[n - 3].text == "in" && tokens[n - 2].text == "the") {
    std::rotate(tokens.begin(), tokens.end() - 3, tokens.end());
    return true;
  }
  if (n >= 4 && tokens[0].text == "in" && tokens[1].text == "the") {
    std::rotate(tokens.begin(), tokens.begin() + 3, tokens.end());
    return true;
  }
  return false;
}

// Rewords a random subset of lexicon words; at least one word is changed and
// at least one is kept when there are two or more.
void partial_synonyms(std::vector<Token>& tokens, Rng& rng, double p) {
  const auto pos = lexicon_positions(tokens);
  if (pos.empty()) return;
  const std::size_t must_change = pos[rng.index(pos.size())];
  std::size_t must_keep = must_change;
  if (pos.size() > 1) {
    while (must_keep == must_change) must_keep = pos[rng.index(pos.size())];
  }
  for (std::size_t i : pos) {
    const bool change = i == must_change || (i != must_keep && rng.bernoulli(p));
    if (change) swap_synonym(tokens[i]);
  }
}

std::string fallback_positive(std::vector<Token> tokens) {
  if (tokens.size() >= 2) {
    std::rotate(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(tokens.size() / 2), tokens.end());
    return render(tokens);
  }
  return tokens.empty() ? std::string("something happened") : "indeed " + tokens[0].text;
}

std::string insert_not(std::vector<Token> tokens) {
  auto verb = std::find_if(tokens.begin(), tokens.end(),
                           [](const Token& t) { return t.info && t.info->slot == Slot::kVerb; });
  if (verb == tokens.end()) verb = tokens.empty() ? tokens.end() : tokens.begin() + 1;
  tokens.insert(verb, Token{"not", std::nullopt});
  return render(tokens);
}

std::string make_positive(const std::vector<Token>& anchor, Rng& rng, MockMode mode) {
  if (lexicon_positions(anchor).empty()) return fallback_positive(anchor);
  std::vector<Token> out = anchor;
  if (mode == MockMode::kParaphrase) {
    partial_synonyms(out, rng, 0.4);
    if (rng.bernoulli(0.5)) reorder(out);
  } else {
    partial_synonyms(out, rng, 0.75);
    reorder(out);
  }
  return render(out);
}

std::string make_negative(const std::vector<Token>& anchor, Rng& rng, MockMode mode) {
  if (mode == MockMode::kLazyNegation) return insert_not(anchor);
  std::vector<Token> out = anchor;
  std::vector<std::size_t> flippable;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].info && toy::antonym(out[i].info->slot, out[i].info->sense) >= 0) flippable.push_back(i);
  }
  if (flippable.empty()) return insert_not(anchor);
  const std::size_t flip = flippable[rng.index(flippable.size())];
  const toy::WordInfo info = *out[flip].info;
  set_form(out[flip], info.slot, toy::antonym(info.slot, info.sense), static_cast<int>(rng.index(2)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i != flip && out[i].info && rng.bernoulli(0.75)) swap_synonym(out[i]);
  }
  return render(out);
}

}  // namespace

std::string mock_generate(std::string_view prompt, std::uint64_t seed, KindHint hint, MockMode mode) {
  if (hint == KindHint::kAuto) hint = detect_kind(prompt);
  const std::string anchor_text = extract_anchor(prompt);
  const std::vector<Token> anchor = analyse(anchor_text);
  // Separate streams per kind so a positive never depends on whether the
  // negative was requested first.
  const std::uint64_t base = mix_seed(fnv1a64(anchor_text), seed);
  Rng pos_rng(mix_seed(base, 1));
  Rng neg_rng(mix_seed(base, 2));
  std::string pos = make_positive(anchor, pos_rng, mode);
  std::string neg = make_negative(anchor, neg_rng, mode);
  if (pos == neg) neg = insert_not(analyse(pos));
  switch (hint) {
    case KindHint::kPositive: return pos;
    case KindHint::kNegative: return neg;
    case KindHint::kCombined: return "Positive: " + pos + "\nNegative: " + neg;
    case KindHint::kAuto: break;
  }
  return pos;
}

bool MockGenerator::anchor_fails(std::string_view anchor) const {
  if (config_.failure_rate <= 0.0) return false;
  Rng rng(mix_seed(fnv1a64(anchor), config_.fault_seed));
  return rng.uniform() < config_.failure_rate;
}

GenerationResponse MockGenerator::generate(const GenerationRequest& request) {
  calls_.fetch_add(1);
  if (anchor_fails(extract_anchor(request.prompt))) {
    if (config_.fault == FaultKind::kTransport) throw TransportError("mock: injected transport failure");
    return {""};
  }
  return {mock_generate(request.prompt, request.seed, KindHint::kAuto, config_.mode)};
}

HttpGeneratorClient::HttpGeneratorClient(HttpClientConfig config) : config_(std::move(config)) {
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const std::size_t scheme = url.find("://");
  const std::size_t path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  scheme_host_port_ = path == std::string::npos ? url : url.substr(0, path);
  path_prefix_ = path == std::string::npos ? "" : url.substr(path);
  if (scheme_host_port_.empty()) throw std::invalid_argument("generator url is empty");
}

GenerationResponse HttpGeneratorClient::generate(const GenerationRequest& request) {
  const std::string body = to_wire(request).dump();
  std::string last_error = "no attempt made";
  double backoff = config_.backoff_seconds;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && backoff > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const auto res = client.Post(path_prefix_ + "/generate", body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      return response_from_wire(json::parse(res->body));
    } catch (const json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw TransportError("generator at " + config_.base_url + ": " + last_error);
}

}  // namespace synthcse::synth
