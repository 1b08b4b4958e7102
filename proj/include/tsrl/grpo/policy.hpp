#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tsrl::grpo {

/// Where a token is emitted: prompt, position in the response, previous token.
/// `prev == vocab_size()` stands for the beginning of the response.
struct ContextKey {
    std::size_t prompt_id = 0;
    std::size_t position = 0;
    std::size_t prev = 0;
};

/// Tabular softmax policy. The logit of token v at a context is
///   prompt_table[prompt, position, prev, v] + shared_table[position, prev, v]
/// where the shared term exists only for the tokens listed in `shared_tokens`.
/// Sharing structural tokens lets response format carry across prompts while
/// answer choice stays per prompt.
class ToyPolicy {
public:
    ToyPolicy(std::vector<std::string> vocab, std::size_t num_prompts, std::size_t max_len,
              std::optional<std::size_t> eos_token = std::nullopt, std::vector<std::size_t> shared_tokens = {});

    const std::vector<std::string>& vocab() const { return vocab_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    std::size_t num_prompts() const { return num_prompts_; }
    std::size_t max_len() const { return max_len_; }
    std::optional<std::size_t> eos_token() const { return eos_; }
    bool has_shared_table() const { return shared_; }
    bool is_shared(std::size_t token) const { return shared_ && shared_mask_[token]; }
    std::size_t bos() const { return vocab_.size(); }

    std::size_t num_parameters() const { return params_.size(); }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    /// Limits the tokens a prompt may emit (the toy's stand-in for reading the
    /// options off the prompt). Unlisted tokens get probability zero.
    void restrict_prompt(std::size_t prompt_id, const std::vector<std::size_t>& allowed);
    bool is_allowed(std::size_t prompt_id, std::size_t token) const;

    std::vector<double> logits(const ContextKey& ctx) const;
    std::vector<double> log_probs(const ContextKey& ctx) const;
    double token_logp(const ContextKey& ctx, std::size_t token) const;

    /// grad += coeff * d log pi(token | ctx) / d theta.
    void accumulate_logp_gradient(const ContextKey& ctx, std::size_t token, double coeff,
                                  std::span<double> grad) const;

    /// Concatenated token strings; the end-of-sequence token prints nothing.
    std::string detokenize(std::span<const std::size_t> tokens) const;
    std::optional<std::size_t> token_id(std::string_view text) const;

    void check_context(const ContextKey& ctx) const;

private:
    std::size_t prompt_offset(const ContextKey& ctx) const;
    std::size_t shared_offset(const ContextKey& ctx) const;

    std::vector<std::string> vocab_;
    std::size_t num_prompts_;
    std::size_t max_len_;
    std::optional<std::size_t> eos_;
    bool shared_;
    std::vector<bool> shared_mask_;
    std::vector<std::vector<bool>> allowed_; // per prompt; empty means unrestricted
    std::vector<double> params_;
};

/// Context for position `t` of a token sequence.
ContextKey context_at(const ToyPolicy& policy, std::size_t prompt_id, std::span<const std::size_t> tokens,
                      std::size_t t);

/// Shannon entropy in nats of softmax(logits).
double softmax_entropy(std::span<const double> logits);
double policy_entropy(const ToyPolicy& policy, const ContextKey& ctx);

struct Rollout {
    std::size_t prompt_id = 0;
    std::vector<std::size_t> token_ids;
    std::vector<double> logp_new;
    std::vector<double> logp_old;
    std::vector<double> logp_ref; // empty when no reference policy is in play
    double reward = 0.0;

    std::size_t length() const { return token_ids.size(); }
};

/// Ancestral sampling; stops after the end-of-sequence token or `max_len` tokens.
/// logp_new and logp_old both hold the sampling policy's log-probabilities.
Rollout sample_rollout(const ToyPolicy& policy, std::size_t prompt_id, std::size_t max_len, std::uint64_t seed);

/// Recomputes per-token log-probabilities of `tokens` under `policy`.
std::vector<double> sequence_logp(const ToyPolicy& policy, std::size_t prompt_id,
                                  std::span<const std::size_t> tokens);

} // namespace tsrl::grpo
