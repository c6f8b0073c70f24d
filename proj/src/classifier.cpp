#include "rst/classifier.hpp"

#include "rst/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace rst {

namespace {

constexpr int checkpoint_version = 1;

struct Layout
{
	std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Layout layout(std::size_t dim, std::size_t classes, std::size_t hidden)
{
	Layout l;
	if (hidden == 0) {
		l.w2 = 0;
		l.b2 = classes * dim;
		l.total = l.b2 + classes;
	} else {
		l.w1 = 0;
		l.b1 = hidden * dim;
		l.w2 = l.b1 + hidden;
		l.b2 = l.w2 + classes * hidden;
		l.total = l.b2 + classes;
	}
	return l;
}

}  // namespace

ClassifierState::ClassifierState(std::size_t dim, std::size_t classes, std::size_t hidden, std::uint64_t seed)
    : dim_(dim), classes_(classes), hidden_(hidden), seed_(seed), params_(parameter_count(dim, classes, hidden), 0.0)
{}

std::size_t ClassifierState::parameter_count(std::size_t dim, std::size_t classes, std::size_t hidden)
{
	return layout(dim, classes, hidden).total;
}

ClassifierState ClassifierState::init(std::size_t dim, std::size_t classes, std::size_t hidden, std::uint64_t seed,
                                      InitScheme scheme)
{
	if (dim < 1)
		throw ValidationError("classifier init: dim must be >= 1");
	if (classes < 2)
		throw ValidationError("classifier init: need at least 2 classes");
	ClassifierState s(dim, classes, hidden, seed);
	if (scheme == InitScheme::zeros)
		return s;

	Rng rng(seed);
	const Layout l = layout(dim, classes, hidden);
	auto fill = [&](std::size_t begin, std::size_t end, std::size_t fan_in) {
		const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
		for (std::size_t i = begin; i < end; ++i)
			s.params_[i] = rng.uniform(-bound, bound);
	};
	if (hidden == 0) {
		fill(0, l.total, dim);
	} else {
		fill(l.w1, l.w2, dim);
		fill(l.w2, l.total, hidden);
	}
	return s;
}

ClassifierState ClassifierState::from_parameters(std::size_t dim, std::size_t classes, std::size_t hidden,
                                                 std::uint64_t seed, std::vector<double> params)
{
	if (dim < 1 || classes < 2)
		throw ValidationError("classifier: invalid shape");
	ClassifierState s(dim, classes, hidden, seed);
	if (params.size() != s.params_.size())
		throw ValidationError("classifier: parameter count " + std::to_string(params.size()) + " does not match shape (" +
		                      std::to_string(s.params_.size()) + ")");
	s.params_ = std::move(params);
	return s;
}

void ClassifierState::logits(std::span<const double> x, std::span<double> out, std::span<double> hidden_out) const
{
	if (x.size() != dim_)
		throw ValidationError("classifier: feature length " + std::to_string(x.size()) + " != dim " +
		                      std::to_string(dim_));
	const Layout l = layout(dim_, classes_, hidden_);
	const double* p = params_.data();
	if (hidden_ == 0) {
		for (std::size_t k = 0; k < classes_; ++k) {
			const double* w = p + k * dim_;
			double z = p[l.b2 + k];
			for (std::size_t j = 0; j < dim_; ++j)
				z += w[j] * x[j];
			out[k] = z;
		}
		return;
	}
	for (std::size_t h = 0; h < hidden_; ++h) {
		const double* w = p + l.w1 + h * dim_;
		double a = p[l.b1 + h];
		for (std::size_t j = 0; j < dim_; ++j)
			a += w[j] * x[j];
		hidden_out[h] = std::tanh(a);
	}
	for (std::size_t k = 0; k < classes_; ++k) {
		const double* w = p + l.w2 + k * hidden_;
		double z = p[l.b2 + k];
		for (std::size_t h = 0; h < hidden_; ++h)
			z += w[h] * hidden_out[h];
		out[k] = z;
	}
}

std::vector<double> ClassifierState::logits(std::span<const double> x) const
{
	std::vector<double> out(classes_);
	std::vector<double> hid(hidden_);
	logits(x, out, hid);
	return out;
}

std::uint64_t ClassifierState::fingerprint() const
{
	const std::uint64_t shape[4] = {dim_, classes_, hidden_, seed_};
	return fnv1a_doubles(params_, fnv1a_bytes(shape, sizeof shape));
}

void softmax(std::span<const double> logits, double temperature, std::span<double> out)
{
	const double zmax = *std::max_element(logits.begin(), logits.end());
	double sum = 0.0;
	for (std::size_t k = 0; k < logits.size(); ++k) {
		out[k] = std::exp((logits[k] - zmax) / temperature);
		sum += out[k];
	}
	for (std::size_t k = 0; k < logits.size(); ++k)
		out[k] /= sum;
}

std::vector<double> softmax(std::span<const double> logits, double temperature)
{
	std::vector<double> out(logits.size());
	softmax(logits, temperature, out);
	return out;
}

Distribution forward(const ClassifierState& state, std::span<const double> features, double temperature)
{
	if (!(temperature > 0.0))
		throw ValidationError("forward: temperature must be positive");
	return Distribution(softmax(state.logits(features), temperature));
}

SnapshotOutputs::SnapshotOutputs(std::map<std::string, Distribution> outputs, double temperature)
    : outputs_(std::move(outputs)), temperature_(temperature)
{}

const Distribution& SnapshotOutputs::at(const std::string& doc_id) const
{
	auto it = outputs_.find(doc_id);
	if (it == outputs_.end())
		throw ContractError("snapshot has no entry for document '" + doc_id + "'");
	return it->second;
}

std::uint64_t SnapshotOutputs::checksum() const
{
	std::uint64_t h = fnv1a_bytes(&temperature_, sizeof temperature_);
	for (const auto& [id, dist] : outputs_) {
		h = fnv1a(id, h);
		h = fnv1a_doubles(dist.probs(), h);
	}
	return h;
}

void TrainParams::validate() const
{
	if (!(learning_rate >= 0.0))
		throw ValidationError("learning_rate must be >= 0");
	if (batch_size == 0)
		throw ValidationError("batch_size must be positive");
	if (epochs == 0)
		throw ValidationError("epochs must be positive");
	if (!(temperature >= 1.0))
		throw ValidationError("temperature must be >= 1");
	if (!(lambda >= 0.0 && lambda <= 1.0))
		throw ValidationError("lambda must lie in [0, 1]");
}

namespace {

// Shared forward/backward pass. Accumulates the mean objective; when `grad`
// is non-empty also the mean gradient.
double evaluate(const ClassifierState& state, std::span<const TrainExample> examples, double temperature,
                std::span<double> grad)
{
	const std::size_t D = state.dim(), n = state.classes(), H = state.hidden();
	const Layout l = layout(D, n, H);
	const auto p = state.parameters();
	const bool want_grad = !grad.empty();
	if (want_grad)
		std::fill(grad.begin(), grad.end(), 0.0);

	std::vector<double> z(n), a(n), at(n), dz(n), hid(H), dh(H);
	double total = 0.0;
	for (const auto& ex : examples) {
		state.logits(ex.features, z, hid);
		std::fill(dz.begin(), dz.end(), 0.0);

		if (ex.hard_weight != 0.0) {
			if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= n)
				throw ValidationError("training example label out of range");
			softmax(z, 1.0, a);
			const auto y = static_cast<std::size_t>(ex.label);
			total += -ex.hard_weight * std::log(a[y]);
			for (std::size_t k = 0; k < n; ++k)
				dz[k] += ex.hard_weight * (a[k] - (k == y ? 1.0 : 0.0));
		}
		if (ex.soft_weight != 0.0) {
			if (ex.soft.size() != n)
				throw ValidationError("soft target has wrong class count");
			softmax(z, temperature, at);
			double ce = 0.0;
			for (std::size_t k = 0; k < n; ++k)
				if (ex.soft[k] > 0.0)
					ce -= ex.soft[k] * std::log(at[k]);
			total += ex.soft_weight * ce;
			for (std::size_t k = 0; k < n; ++k)
				dz[k] += ex.soft_weight * (at[k] - ex.soft[k]) / temperature;
		}
		if (!want_grad)
			continue;

		if (H == 0) {
			for (std::size_t k = 0; k < n; ++k) {
				double* g = grad.data() + k * D;
				for (std::size_t j = 0; j < D; ++j)
					g[j] += dz[k] * ex.features[j];
				grad[l.b2 + k] += dz[k];
			}
			continue;
		}
		std::fill(dh.begin(), dh.end(), 0.0);
		for (std::size_t k = 0; k < n; ++k) {
			double* g = grad.data() + l.w2 + k * H;
			const double* w = p.data() + l.w2 + k * H;
			for (std::size_t h = 0; h < H; ++h) {
				g[h] += dz[k] * hid[h];
				dh[h] += dz[k] * w[h];
			}
			grad[l.b2 + k] += dz[k];
		}
		for (std::size_t h = 0; h < H; ++h) {
			const double dpre = dh[h] * (1.0 - hid[h] * hid[h]);
			if (dpre == 0.0)
				continue;
			double* g = grad.data() + l.w1 + h * D;
			for (std::size_t j = 0; j < D; ++j)
				g[j] += dpre * ex.features[j];
			grad[l.b1 + h] += dpre;
		}
	}

	if (examples.empty())
		return 0.0;
	const double inv = 1.0 / static_cast<double>(examples.size());
	if (want_grad)
		for (double& g : grad)
			g *= inv;
	return total * inv;
}

class Optimizer
{
public:
	Optimizer(const TrainParams& params, std::size_t n_params, std::size_t total_steps)
	    : params_(params), total_steps_(total_steps)
	{
		if (params.optimizer == OptimizerKind::adam) {
			m_.assign(n_params, 0.0);
			v_.assign(n_params, 0.0);
		}
	}

	void step(std::span<double> theta, std::span<const double> grad)
	{
		double lr = params_.learning_rate;
		if (params_.linear_decay && total_steps_ > 0)
			lr *= 1.0 - static_cast<double>(t_) / static_cast<double>(total_steps_);
		++t_;
		if (params_.optimizer == OptimizerKind::sgd) {
			for (std::size_t i = 0; i < theta.size(); ++i)
				theta[i] -= lr * grad[i];
			return;
		}
		constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
		const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
		const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
		for (std::size_t i = 0; i < theta.size(); ++i) {
			m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
			v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
			theta[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
		}
	}

private:
	TrainParams params_;
	std::size_t total_steps_;
	std::size_t t_ = 0;
	std::vector<double> m_, v_;
};

}  // namespace

double objective(const ClassifierState& state, std::span<const TrainExample> examples, double temperature)
{
	return evaluate(state, examples, temperature, {});
}

double objective_and_gradient(const ClassifierState& state, std::span<const TrainExample> examples,
                              double temperature, std::span<double> grad)
{
	if (grad.size() != state.parameters().size())
		throw ValidationError("gradient buffer has wrong size");
	return evaluate(state, examples, temperature, grad);
}

void fit(ClassifierState& state, std::span<const TrainExample> examples, const TrainParams& params, BatchOrder order,
         const EpochHook& hook)
{
	params.validate();
	if (examples.empty())
		return;
	const std::size_t n = examples.size();
	const std::size_t batches = (n + params.batch_size - 1) / params.batch_size;
	Optimizer opt(params, state.parameters().size(), batches * params.epochs);

	std::vector<std::size_t> idx(n);
	std::iota(idx.begin(), idx.end(), std::size_t{0});
	Rng rng(params.seed);
	std::vector<double> grad(state.parameters().size());
	std::vector<TrainExample> batch;
	batch.reserve(params.batch_size);

	for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
		if (order == BatchOrder::shuffled)
			rng.shuffle(idx);
		for (std::size_t b = 0; b < batches; ++b) {
			batch.clear();
			const std::size_t end = std::min(n, (b + 1) * params.batch_size);
			for (std::size_t i = b * params.batch_size; i < end; ++i)
				batch.push_back(examples[idx[i]]);
			evaluate(state, batch, params.temperature, grad);
			opt.step(state.parameters(), grad);
		}
		if (hook)
			hook(epoch, state);
	}
}

namespace {

std::vector<TrainExample> mixture_examples(std::span<const Document> batch, const SnapshotOutputs& snapshot,
                                       double lambda)
{
	std::vector<TrainExample> out;
	out.reserve(batch.size());
	for (const auto& d : batch) {
		if (!d.label)
			throw ValidationError("labeled document '" + d.id + "' has no label");
		TrainExample ex{.features = d.features, .label = *d.label, .hard_weight = 1.0 - lambda, .soft = {}};
		if (lambda != 0.0) {
			ex.soft = snapshot.at(d.id).probs();
			ex.soft_weight = lambda;
		} else if (!snapshot.contains(d.id)) {
			throw ContractError("snapshot has no entry for document '" + d.id + "'");
		}
		out.push_back(ex);
	}
	return out;
}

void check_lambda(double lambda)
{
	if (!(lambda >= 0.0 && lambda <= 1.0))
		throw ValidationError("lambda must lie in [0, 1]");
}

}  // namespace

double loss_eq1(const ClassifierState& state, std::span<const Document> batch, const SnapshotOutputs& snapshot,
                double lambda, double temperature)
{
	check_lambda(lambda);
	const auto ex = mixture_examples(batch, snapshot, lambda);
	return objective(state, ex, temperature);
}

std::vector<double> grad_loss_eq1(const ClassifierState& state, std::span<const Document> batch,
                                  const SnapshotOutputs& snapshot, double lambda, double temperature)
{
	check_lambda(lambda);
	const auto ex = mixture_examples(batch, snapshot, lambda);
	std::vector<double> grad(state.parameters().size());
	evaluate(state, ex, temperature, grad);
	return grad;
}

void train_soft(ClassifierState& state, std::span<const SoftExample> sequence, const TrainParams& params)
{
	if (sequence.empty())
		return;
	std::vector<TrainExample> ex;
	ex.reserve(sequence.size());
	for (const auto& s : sequence) {
		if (s.target.size() != state.classes())
			throw ValidationError("soft target has wrong class count");
		ex.push_back({.features = s.features, .soft = s.target.probs(), .soft_weight = 1.0});
	}
	fit(state, ex, params, BatchOrder::as_given);
}

SnapshotOutputs capture_snapshot(const ClassifierState& state, std::span<const Document> labeled, double temperature)
{
	std::map<std::string, Distribution> out;
	for (const auto& d : labeled)
		out.insert_or_assign(d.id, forward(state, d.features, temperature));
	return SnapshotOutputs(std::move(out), temperature);
}

void train_finetune(ClassifierState& state, std::span<const Document> labeled, const SnapshotOutputs& snapshot,
                    const TrainParams& params, const EpochHook& hook)
{
	params.validate();
	if (params.lambda != 0.0 && snapshot.temperature() != params.temperature)
		throw ContractError("snapshot was captured at a different temperature");
	const auto ex = mixture_examples(labeled, snapshot, params.lambda);
	fit(state, ex, params, BatchOrder::shuffled, hook);
}

void train_hard(ClassifierState& state, std::span<const Document> docs, std::span<const double> weights,
                const TrainParams& params, const EpochHook& hook)
{
	if (!weights.empty() && weights.size() != docs.size())
		throw ValidationError("train_hard: weights and documents differ in length");
	std::vector<TrainExample> ex;
	ex.reserve(docs.size());
	for (std::size_t i = 0; i < docs.size(); ++i) {
		if (!docs[i].label)
			throw ValidationError("document '" + docs[i].id + "' has no label");
		ex.push_back({.features = docs[i].features,
		              .label = *docs[i].label,
		              .hard_weight = weights.empty() ? 1.0 : weights[i],
		              .soft = {}});
	}
	fit(state, ex, params, BatchOrder::shuffled, hook);
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt)
{
	out << "rst-checkpoint " << checkpoint_version << '\n';
	for (const auto& [k, v] : ckpt.meta) {
		if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
			throw ValidationError("checkpoint metadata must be single-line with space-free keys");
		out << "meta " << k << ' ' << v << '\n';
	}
	out << "models " << ckpt.models.size() << '\n';
	char buf[64];
	for (const auto& m : ckpt.models) {
		out << "model dim " << m.dim() << " hidden " << m.hidden() << " classes " << m.classes() << " seed "
		    << m.seed() << " params " << m.parameters().size() << '\n';
		for (double v : m.parameters()) {
			std::snprintf(buf, sizeof buf, "%a\n", v);
			out << buf;
		}
	}
	out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in)
{
	auto fail = [](const std::string& what) { throw ValidationError("checkpoint: " + what); };
	std::string line, word;
	int version = 0;
	if (!std::getline(in, line) || std::sscanf(line.c_str(), "rst-checkpoint %d", &version) != 1)
		fail("missing header");
	if (version != checkpoint_version)
		fail("unsupported version " + std::to_string(version));

	Checkpoint ckpt;
	std::size_t n_models = 0;
	while (std::getline(in, line)) {
		std::istringstream ls(line);
		ls >> word;
		if (word == "meta") {
			std::string key, value;
			ls >> key;
			std::getline(ls >> std::ws, value);
			ckpt.meta[key] = value;
		} else if (word == "models") {
			ls >> n_models;
			break;
		} else {
			fail("unexpected line '" + line + "'");
		}
	}
	for (std::size_t i = 0; i < n_models; ++i) {
		std::size_t dim = 0, hidden = 0, classes = 0, count = 0;
		std::uint64_t seed = 0;
		if (!std::getline(in, line) ||
		    std::sscanf(line.c_str(), "model dim %zu hidden %zu classes %zu seed %lu params %zu", &dim, &hidden,
		                &classes, &seed, &count) != 5)
			fail("bad model header");
		std::vector<double> params(count);
		for (auto& v : params) {
			if (!std::getline(in, line))
				fail("truncated parameters");
			v = std::strtod(line.c_str(), nullptr);
		}
		ckpt.models.push_back(ClassifierState::from_parameters(dim, classes, hidden, seed, std::move(params)));
	}
	if (!std::getline(in, line) || line != "end")
		fail("missing end marker");
	return ckpt;
}

}  // namespace rst
