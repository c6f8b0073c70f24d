#ifndef RST_CLASSIFIER_HPP
#define RST_CLASSIFIER_HPP

#include "rst/document.hpp"
#include "rst/infometrics.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rst {

enum class InitScheme { uniform, zeros };

// Parameters of a one-hidden-layer softmax classifier. hidden == 0 degenerates
// to multinomial logistic regression.
//
// Flat parameter layout:
//   hidden > 0 : [W1 (hidden x dim) | b1 (hidden) | W2 (classes x hidden) | b2 (classes)]
//   hidden == 0: [W (classes x dim) | b (classes)]
class ClassifierState
{
public:
	static ClassifierState init(std::size_t dim, std::size_t classes, std::size_t hidden, std::uint64_t seed,
	                            InitScheme scheme = InitScheme::uniform);

	static ClassifierState from_parameters(std::size_t dim, std::size_t classes, std::size_t hidden,
	                                       std::uint64_t seed, std::vector<double> params);

	static std::size_t parameter_count(std::size_t dim, std::size_t classes, std::size_t hidden);

	std::size_t dim() const { return dim_; }
	std::size_t classes() const { return classes_; }
	std::size_t hidden() const { return hidden_; }
	std::uint64_t seed() const { return seed_; }

	std::span<const double> parameters() const { return params_; }
	std::span<double> parameters() { return params_; }

	// Raw last-layer logits. `hidden_out` receives the hidden activations when
	// hidden() > 0 and may be empty otherwise.
	void logits(std::span<const double> x, std::span<double> out, std::span<double> hidden_out) const;
	std::vector<double> logits(std::span<const double> x) const;

	std::uint64_t fingerprint() const;

	bool operator==(const ClassifierState&) const = default;

private:
	ClassifierState(std::size_t dim, std::size_t classes, std::size_t hidden, std::uint64_t seed);

	std::size_t dim_ = 0;
	std::size_t classes_ = 0;
	std::size_t hidden_ = 0;
	std::uint64_t seed_ = 0;
	std::vector<double> params_;
};

// softmax(logits / temperature), max-shifted
void softmax(std::span<const double> logits, double temperature, std::span<double> out);
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

Distribution forward(const ClassifierState& state, std::span<const double> features, double temperature = 1.0);

// Tempered outputs of a teacher captured before finetuning. Read-only once built.
class SnapshotOutputs
{
public:
	SnapshotOutputs() = default;
	SnapshotOutputs(std::map<std::string, Distribution> outputs, double temperature);

	const Distribution& at(const std::string& doc_id) const;
	bool contains(const std::string& doc_id) const { return outputs_.contains(doc_id); }
	std::size_t size() const { return outputs_.size(); }
	double temperature() const { return temperature_; }
	const std::map<std::string, Distribution>& entries() const { return outputs_; }

	// FNV-1a over ids and probability bits, in key order
	std::uint64_t checksum() const;

	bool operator==(const SnapshotOutputs&) const = default;

private:
	std::map<std::string, Distribution> outputs_;
	double temperature_ = 1.0;
};

enum class OptimizerKind { sgd, adam };

struct TrainParams
{
	double learning_rate = 1e-2;
	std::size_t batch_size = 32;
	std::size_t epochs = 20;
	double temperature = 2.0;
	double lambda = 0.3;
	OptimizerKind optimizer = OptimizerKind::adam;
	bool linear_decay = true;
	std::uint64_t seed = 0;  // mini-batch shuffling

	void validate() const;
};

// One training example of the generic objective
//   hard_weight * CE(onehot(label), softmax(z)) + soft_weight * CE(soft, softmax(z / T))
// averaged over the mini-batch. Spans must outlive the training call.
struct TrainExample
{
	std::span<const double> features;
	int label = -1;
	double hard_weight = 0.0;
	std::span<const double> soft;
	double soft_weight = 0.0;
};

using EpochHook = std::function<void(std::size_t epoch, const ClassifierState&)>;

enum class BatchOrder { shuffled, as_given };

// Mean objective over `examples` and its exact gradient (same layout as parameters()).
double objective(const ClassifierState& state, std::span<const TrainExample> examples, double temperature);
double objective_and_gradient(const ClassifierState& state, std::span<const TrainExample> examples, double temperature,
                              std::span<double> grad);

// Mini-batch optimisation of the generic objective; optimizer state lives for one call.
void fit(ClassifierState& state, std::span<const TrainExample> examples, const TrainParams& params, BatchOrder order,
         const EpochHook& hook = {});

// (1 - lambda) * CE(y, a) + lambda * CE(q, a'), averaged over the batch.
double loss_eq1(const ClassifierState& state, std::span<const Document> batch, const SnapshotOutputs& snapshot,
                double lambda, double temperature);
std::vector<double> grad_loss_eq1(const ClassifierState& state, std::span<const Document> batch,
                                  const SnapshotOutputs& snapshot, double lambda, double temperature);

struct SoftExample
{
	std::span<const double> features;
	Distribution target;
};

// Distillation on soft targets, tempered on the student side as well; presented
// in the given order every epoch. Empty input leaves the state untouched.
void train_soft(ClassifierState& state, std::span<const SoftExample> sequence, const TrainParams& params);

SnapshotOutputs capture_snapshot(const ClassifierState& state, std::span<const Document> labeled, double temperature);

// Mini-batch descent on loss_eq1. Every labeled document must be in the snapshot.
void train_finetune(ClassifierState& state, std::span<const Document> labeled, const SnapshotOutputs& snapshot,
                    const TrainParams& params, const EpochHook& hook = {});

// Plain cross entropy on hard labels with per-example weights (weights empty = all 1).
void train_hard(ClassifierState& state, std::span<const Document> docs, std::span<const double> weights,
                const TrainParams& params, const EpochHook& hook = {});

// Versioned text checkpoint holding one or more models plus string metadata.
struct Checkpoint
{
	std::map<std::string, std::string> meta;
	std::vector<ClassifierState> models;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace rst

#endif
