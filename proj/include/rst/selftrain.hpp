#ifndef RST_SELFTRAIN_HPP
#define RST_SELFTRAIN_HPP

#include "rst/classifier.hpp"
#include "rst/document.hpp"
#include "rst/infometrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rst {

enum class Execution { sequential, parallel };

struct RunConfig
{
	std::size_t step_size = 100;          // K
	double sample_ratio = 70.0;           // R, percent
	double alpha = 1e-4;
	std::size_t classifiers = 2;          // m
	double confidence_threshold = 0.9;
	double growth_cap_fraction = 0.10;
	double mix_fraction = 0.20;
	std::size_t hidden_width = 0;
	std::size_t n_classes = 0;            // 0: one more than the largest label in L
	std::uint64_t seed = 1;
	TrainParams train;                    // carries lambda and temperature
	Execution execution = Execution::sequential;

	double lambda() const { return train.lambda; }
	double temperature() const { return train.temperature; }

	void validate() const;
	// Covers every field that can change results; `execution` is excluded
	// because sequential and parallel runs are bit-identical.
	std::uint64_t fingerprint() const;
};

struct PseudoLabel
{
	std::string doc_id;
	std::vector<double> features;
	std::vector<double> mean_logits;
	Distribution soft_label;   // softmax(mean_logits) at T = 1
	int hard_label = 0;        // argmax(soft_label)
	std::size_t iteration = 0; // loop index at which the document left U

	static PseudoLabel make(const Document& doc, std::vector<double> mean_logits, std::size_t iteration);
};

// Indices into `pseudo` in training order: newest iteration block first, the
// earliest block last. A seeded mix_fraction of all items is moved into a
// random position of a different block.
std::vector<std::size_t> order_curriculum(std::span<const PseudoLabel> pseudo, double mix_fraction,
                                          std::uint64_t seed);

enum class Ranking {
	uncertainty,   // uncertainty-aware score over m classifiers
	confidence,    // max of the mean distribution
	low_entropy,   // negative mean Shannon entropy of member outputs
};

struct Candidate
{
	std::size_t index = 0;  // position in U
	std::string doc_id;
	int hard_label = 0;
	std::vector<double> mean_logits;
	double score = 0.0;
	double confidence = 0.0;  // max of the mean member distribution
};

struct ScoredPool
{
	std::vector<Candidate> survivors;    // members agree and confidence >= threshold
	std::vector<Candidate> throttled;    // members agree, confidence below threshold
	std::vector<Candidate> disagreeing;  // ranked with the label of the mean logits

	std::size_t n_agree() const { return survivors.size() + throttled.size(); }
};

// `member_logits[i]` is classifier i's (|U| x n) logit matrix.
ScoredPool label_and_score(std::span<const Matrix> member_logits, std::span<const Document> unlabeled,
                           const RunConfig& config, Ranking ranking = Ranking::uncertainty);
ScoredPool label_and_score(std::span<const ClassifierState> classifiers, std::span<const Document> unlabeled,
                           const RunConfig& config, Ranking ranking = Ranking::uncertainty);

enum class SelectionTier { survivors, agreeing, all };

struct Selection
{
	std::vector<Candidate> chosen;
	std::size_t step = 0;
	SelectionTier tier = SelectionTier::survivors;
};

// step = clamp(min(K, ceil(cap * (|L| + |S|))), 1, ...). Takes the top `step`
// survivors by score, ties by ascending id. With no survivors, falls back to
// the agreeing pool and then to every candidate so the loop always advances.
std::size_t growth_step(std::size_t k, double cap_fraction, std::size_t labeled, std::size_t pseudo);
Selection select_top(const ScoredPool& pool, std::size_t k, std::size_t labeled_size, std::size_t pseudo_size,
                     const RunConfig& config);

struct MemberRecord
{
	std::uint64_t pseudo_subsample = 0;    // fingerprint of the S subsample ids
	std::uint64_t labeled_subsample = 0;   // fingerprint of the L subsample ids
	std::uint64_t snapshot_before = 0;
	std::uint64_t snapshot_after = 0;

	bool operator==(const MemberRecord&) const = default;
};

struct IterationRecord
{
	std::size_t iteration = 0;
	std::size_t step = 0;
	std::size_t n_agree = 0;
	std::size_t n_throttled = 0;
	std::vector<std::string> selected_ids;
	double min_score = 0.0;
	double max_score = 0.0;
	std::size_t labeled_size = 0;
	std::size_t pseudo_size = 0;     // after the move
	std::size_t unlabeled_size = 0;  // after the move
	SelectionTier tier = SelectionTier::survivors;
	std::vector<MemberRecord> members;

	bool operator==(const IterationRecord&) const = default;
};

struct RunReport
{
	std::string variant = "rst_full";
	std::uint64_t config_fingerprint = 0;
	std::vector<IterationRecord> iterations;
	std::uint64_t final_fingerprint = 0;
};

// One JSON object per iteration.
void write_report_jsonl(std::ostream& out, const RunReport& report, const std::string& config_hash = {},
                        std::uint64_t seed = 0);

// How each member (and the final classifier) consumes S and L.
enum class PretrainMode {
	distill_finetune,  // curriculum distillation on S, then loss_eq1 on L
	distill_plain_ce,  // curriculum distillation on S, then plain CE on L, no snapshot
	joint_weighted,    // S joins L with hard labels and weight `pseudo_weight`, one phase
};

struct PipelineSpec
{
	std::string variant = "rst_full";
	RunConfig config;
	PretrainMode pretrain = PretrainMode::distill_finetune;
	Ranking ranking = Ranking::uncertainty;
	double pseudo_weight = 1.0;
};

struct RunResult
{
	std::vector<ClassifierState> models;
	bool majority_vote = false;
	RunReport report;
	std::vector<PseudoLabel> pseudo_labels;
};

std::vector<int> predict(const RunResult& result, std::span<const Document> docs);

struct RunHooks
{
	EpochHook final_epoch;  // after each epoch of the final classifier's last phase
};

// One pass of the main loop: trains the members, scores U, moves the selection
// from U into S tagged with `iteration`.
IterationRecord rst_iteration(std::span<const Document> labeled, std::vector<Document>& unlabeled,
                              std::vector<PseudoLabel>& pseudo, const PipelineSpec& spec, std::size_t iteration);

RunResult run_pipeline(std::span<const Document> labeled, std::span<const Document> unlabeled,
                       const PipelineSpec& spec, const RunHooks& hooks = {});

RunResult run_rst(std::span<const Document> labeled, std::span<const Document> unlabeled, const RunConfig& config,
                  const RunHooks& hooks = {});

// Shared helpers for the baselines.
std::size_t resolve_classes(std::span<const Document> labeled, const RunConfig& config);
void check_inputs(std::span<const Document> labeled, std::span<const Document> unlabeled);
std::uint64_t id_fingerprint(std::span<const Document> docs);

}  // namespace rst

#endif
