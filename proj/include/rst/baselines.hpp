#ifndef RST_BASELINES_HPP
#define RST_BASELINES_HPP

#include "rst/selftrain.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace rst {

enum class Variant {
	self_train,
	weighted_aug,
	tri_entropy,
	rst_no_subsample,
	rst_no_pretrain,
	rst_plain_ce,
	rst_full,
};

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
std::vector<Variant> all_variants();

struct VariantSpec
{
	Variant variant = Variant::rst_full;
	double weight_pseudo = 0.5;  // weighted_aug only
	RunConfig config;
	// Self-training only: fraction of L held out to pick the pseudo-label cap
	// from {10%, 25%, 50%, 100%} of U by validation macro-F1. 0 disables.
	double validation_fraction = 0.0;

	void validate() const;
};

struct SelfTrainOptions
{
	std::optional<std::size_t> max_pseudo_labels;  // unset: exhaust U
	double validation_fraction = 0.0;
};

// Single classifier retrained from scratch on L plus hard pseudo-labels each
// round; candidates ranked by max softmax confidence.
RunResult run_self_train(std::span<const Document> labeled, std::span<const Document> unlabeled,
                         const RunConfig& config, const SelfTrainOptions& options = {});

// The RST selection pipeline, with pretraining replaced by one joint phase in
// which pseudo-labels carry loss weight `weight`.
RunResult run_weighted_aug(std::span<const Document> labeled, std::span<const Document> unlabeled,
                           const RunConfig& config, double weight = 0.5);

// Three classifiers on bootstrap resamples of L; agreed candidates ranked by
// ascending mean entropy; prediction by majority vote.
RunResult run_tri_entropy(std::span<const Document> labeled, std::span<const Document> unlabeled,
                          const RunConfig& config);

// Dispatch for every variant. Reports carry the base config fingerprint so
// runs of different variants can be matched.
RunResult run_ablation(const VariantSpec& spec, std::span<const Document> labeled,
                       std::span<const Document> unlabeled, const RunHooks& hooks = {});

// The pipeline description each RST-family variant maps onto.
PipelineSpec pipeline_for(const VariantSpec& spec);

}  // namespace rst

#endif
