#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace synthcse::synth {

struct GenerationRequest {
  std::string prompt;
  std::size_t max_tokens = 128;
  double temperature = 0.7;
  std::uint64_t seed = 0;
};

struct GenerationResponse {
  std::string text;
};

// Request body and response body of POST /generate.
nlohmann::json to_wire(const GenerationRequest& request);
GenerationRequest request_from_wire(const nlohmann::json& j);
nlohmann::json to_wire(const GenerationResponse& response);
GenerationResponse response_from_wire(const nlohmann::json& j);

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Implementations must be safe to call from several threads at once.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

enum class KindHint { kAuto, kPositive, kNegative, kCombined };

// kParaphrase: positives swap some words for synonyms, negatives flip an
// adjective or verb to its antonym and reword the rest.
// kLazyNegation: positives are heavier rewrites, negatives only insert "not"
// before the verb, so they stay lexically close to the anchor.
enum class MockMode { kParaphrase, kLazyNegation };

std::string_view mock_mode_name(MockMode mode);
MockMode parse_mock_mode(std::string_view name);

// The anchor is the text after the last "Premise: " with one trailing period
// removed.
std::string extract_anchor(std::string_view prompt);

// Reads the instruction paragraph just before the anchor: "entailment" and
// "contradiction" together mean combined, otherwise whichever one appears.
KindHint detect_kind(std::string_view prompt);

// Pure function of (prompt, seed, hint, mode). Positive and negative outputs
// for the same prompt and seed always differ. Combined output is two lines,
// "Positive: ..." and "Negative: ...".
std::string mock_generate(std::string_view prompt, std::uint64_t seed, KindHint hint = KindHint::kAuto,
                          MockMode mode = MockMode::kParaphrase);

enum class FaultKind { kEmptyText, kTransport };

struct MockConfig {
  MockMode mode = MockMode::kParaphrase;
  // Fraction of anchors for which every request fails. The choice is a hash
  // of (anchor, fault_seed), so retries cannot rescue a failing anchor.
  double failure_rate = 0.0;
  FaultKind fault = FaultKind::kEmptyText;
  std::uint64_t fault_seed = 0;
};

class MockGenerator final : public GeneratorClient {
 public:
  explicit MockGenerator(MockConfig config = {}) : config_(config) {}

  GenerationResponse generate(const GenerationRequest& request) override;

  std::size_t calls() const { return calls_.load(); }
  const MockConfig& config() const { return config_; }

  bool anchor_fails(std::string_view anchor) const;

 private:
  MockConfig config_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpClientConfig {
  std::string base_url = "http://127.0.0.1:8080";
  double timeout_seconds = 30.0;
  std::size_t max_retries = 2;
  double backoff_seconds = 0.5;  // doubled after each failed attempt
};

// Speaks the /generate protocol. Connection errors and non-200 replies are
// retried; exhausting the retries throws TransportError.
class HttpGeneratorClient final : public GeneratorClient {
 public:
  explicit HttpGeneratorClient(HttpClientConfig config);

  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  HttpClientConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace synthcse::synth
