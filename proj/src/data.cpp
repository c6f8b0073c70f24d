#include "rst/data.hpp"

#include "rst/common.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <unordered_set>

namespace rst {

void Corpus::validate() const
{
	std::unordered_set<std::string> seen;
	for (const auto& d : documents) {
		if (!seen.insert(d.id).second)
			throw ValidationError("duplicate document id '" + d.id + "'");
		if (d.features.size() != dim)
			throw ValidationError("document '" + d.id + "' has feature length " + std::to_string(d.features.size()) +
			                      ", expected " + std::to_string(dim));
		if (d.label && (*d.label < 0 || static_cast<std::size_t>(*d.label) >= n_classes))
			throw ValidationError("document '" + d.id + "' has label " + std::to_string(*d.label) +
			                      " outside [0, " + std::to_string(n_classes) + ")");
	}
}

TextCorpus parse_jsonl(std::istream& in, const JsonlSchema& schema, const std::string& source)
{
	TextCorpus out;
	std::unordered_set<std::string> seen;
	std::string line;
	int max_label = -1;
	for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
		if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
			continue;
		auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
		nlohmann::json j;
		try {
			j = nlohmann::json::parse(line);
		} catch (const nlohmann::json::parse_error& e) {
			throw ValidationError(where() + "malformed JSON (" + e.what() + ")");
		}
		if (!j.is_object())
			throw ValidationError(where() + "record is not an object");
		if (!j.contains(schema.id_key) || !j[schema.id_key].is_string())
			throw ValidationError(where() + "missing string field '" + schema.id_key + "'");
		if (!j.contains(schema.text_key) || !j[schema.text_key].is_string())
			throw ValidationError(where() + "missing string field '" + schema.text_key + "'");

		TextRecord rec{j[schema.id_key].get<std::string>(), j[schema.text_key].get<std::string>(), std::nullopt};
		if (j.contains(schema.label_key) && !j[schema.label_key].is_null()) {
			if (!j[schema.label_key].is_number_integer())
				throw ValidationError(where() + "field '" + schema.label_key + "' must be an integer");
			const int label = j[schema.label_key].get<int>();
			if (label < 0 || (schema.n_classes > 0 && static_cast<std::size_t>(label) >= schema.n_classes))
				throw ValidationError(where() + "label " + std::to_string(label) + " out of range");
			rec.label = label;
			max_label = std::max(max_label, label);
		}
		if (!seen.insert(rec.id).second)
			throw ValidationError(where() + "duplicate id '" + rec.id + "'");
		out.records.push_back(std::move(rec));
	}
	out.n_classes = schema.n_classes > 0 ? schema.n_classes : static_cast<std::size_t>(std::max(max_label + 1, 2));
	return out;
}

TextCorpus load_jsonl(const std::filesystem::path& path, const JsonlSchema& schema)
{
	std::ifstream in(path);
	if (!in)
		throw ValidationError("cannot read corpus file '" + path.string() + "'");
	return parse_jsonl(in, schema, path.string());
}

std::vector<std::vector<double>> featurize_hashed_bow(std::span<const std::string> texts, const HashingParams& params)
{
	if (params.dim == 0 || (params.dim & (params.dim - 1)) != 0)
		throw ValidationError("hashing dim must be a power of two");
	const std::regex token(params.token_pattern);
	const std::uint64_t mask = params.dim - 1;
	std::vector<std::vector<double>> out(texts.size());
	const auto n = static_cast<std::ptrdiff_t>(texts.size());

#pragma omp parallel for schedule(dynamic, 16)
	for (std::ptrdiff_t i = 0; i < n; ++i) {
		std::string text = texts[static_cast<std::size_t>(i)];
		if (params.lowercase)
			std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
		std::vector<double> row(params.dim, 0.0);
		for (std::sregex_iterator it(text.begin(), text.end(), token), end; it != end; ++it) {
			const std::uint64_t h = fnv1a(it->str());
			row[h & mask] += (h >> 63) ? -1.0 : 1.0;
		}
		double norm = 0.0;
		for (double v : row)
			norm += v * v;
		if (norm > 0.0) {
			norm = std::sqrt(norm);
			for (double& v : row)
				v /= norm;
		}
		out[static_cast<std::size_t>(i)] = std::move(row);
	}
	return out;
}

Corpus featurize(const TextCorpus& text, const HashingParams& params)
{
	std::vector<std::string> texts;
	texts.reserve(text.records.size());
	for (const auto& r : text.records)
		texts.push_back(r.text);
	auto rows = featurize_hashed_bow(texts, params);

	Corpus c;
	c.n_classes = text.n_classes;
	c.dim = params.dim;
	c.provenance = "file";
	c.documents.reserve(rows.size());
	for (std::size_t i = 0; i < rows.size(); ++i)
		c.documents.push_back({text.records[i].id, std::move(rows[i]), text.records[i].label});
	c.validate();
	return c;
}

void SynthSpec::validate() const
{
	if (n_classes < 2)
		throw ValidationError("synth: need at least 2 classes");
	if (dim < 1)
		throw ValidationError("synth: dim must be >= 1");
	if (generator == Generator::two_rings && dim < 2)
		throw ValidationError("synth: two_rings needs dim >= 2");
	if (!(class_separation > 0.0))
		throw ValidationError("synth: class_separation must be positive");
	if (!(overlap_noise_sigma >= 0.0))
		throw ValidationError("synth: noise sigma must be non-negative");
	if (!class_weights.empty()) {
		if (class_weights.size() != n_classes)
			throw ValidationError("synth: class_weights length must equal n_classes");
		double sum = 0.0;
		for (double w : class_weights) {
			if (!(w >= 0.0))
				throw ValidationError("synth: class weights must be non-negative");
			sum += w;
		}
		if (std::abs(sum - 1.0) > 1e-9)
			throw ValidationError("synth: class_weights must sum to 1");
	}
}

std::vector<std::vector<double>> blob_means(std::size_t n_classes, std::size_t dim, double separation)
{
	std::vector<std::vector<double>> means(n_classes, std::vector<double>(dim, 0.0));
	if (n_classes == 2) {
		means[0][0] = -separation / 2.0;
		means[1][0] = separation / 2.0;
	} else if (dim >= n_classes) {
		// scaled basis vectors: every pair at distance `separation`
		for (std::size_t c = 0; c < n_classes; ++c)
			means[c][c] = separation / std::sqrt(2.0);
	} else if (dim >= 2) {
		// regular polygon, neighbours at distance `separation`
		const double radius = separation / (2.0 * std::sin(M_PI / static_cast<double>(n_classes)));
		for (std::size_t c = 0; c < n_classes; ++c) {
			const double a = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(n_classes);
			means[c][0] = radius * std::cos(a);
			means[c][1] = radius * std::sin(a);
		}
	} else {
		for (std::size_t c = 0; c < n_classes; ++c)
			means[c][0] = separation * static_cast<double>(c);
	}
	return means;
}

Corpus synth(const SynthSpec& spec)
{
	spec.validate();
	std::vector<double> weights = spec.class_weights;
	if (weights.empty())
		weights.assign(spec.n_classes, 1.0 / static_cast<double>(spec.n_classes));
	const auto counts = largest_remainder(spec.n_total, weights);
	const auto means = blob_means(spec.n_classes, spec.dim, spec.class_separation);

	Rng rng(spec.seed);
	std::vector<std::pair<std::vector<double>, int>> points;
	points.reserve(spec.n_total);
	for (std::size_t c = 0; c < spec.n_classes; ++c) {
		for (std::size_t i = 0; i < counts[c]; ++i) {
			std::vector<double> x(spec.dim);
			if (spec.generator == Generator::gaussian_blobs) {
				for (std::size_t j = 0; j < spec.dim; ++j)
					x[j] = means[c][j] + spec.overlap_noise_sigma * rng.normal();
			} else {
				const double radius = spec.class_separation * static_cast<double>(c + 1) +
				                      spec.overlap_noise_sigma * rng.normal();
				const double angle = rng.uniform(0.0, 2.0 * M_PI);
				x[0] = radius * std::cos(angle);
				x[1] = radius * std::sin(angle);
				for (std::size_t j = 2; j < spec.dim; ++j)
					x[j] = spec.overlap_noise_sigma * rng.normal();
			}
			points.emplace_back(std::move(x), static_cast<int>(c));
		}
	}
	rng.shuffle(points);

	Corpus corpus;
	corpus.n_classes = spec.n_classes;
	corpus.dim = spec.dim;
	corpus.provenance = std::string("synthetic(") +
	                    (spec.generator == Generator::gaussian_blobs ? "gaussian_blobs" : "two_rings") +
	                    ", seed=" + std::to_string(spec.seed) + ")";
	corpus.documents.reserve(points.size());
	char id[32];
	for (std::size_t i = 0; i < points.size(); ++i) {
		std::snprintf(id, sizeof id, "d%07zu", i);
		corpus.documents.push_back({id, std::move(points[i].first), points[i].second});
	}
	return corpus;
}

Split stratified_split(const Corpus& corpus, std::size_t n_labeled, std::size_t n_unlabeled, std::size_t n_test,
                       std::uint64_t seed)
{
	corpus.validate();
	Rng rng(seed);
	std::vector<std::vector<std::size_t>> by_class(corpus.n_classes);
	std::vector<std::size_t> no_label;
	for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
		const auto& lab = corpus.documents[i].label;
		(lab ? by_class[static_cast<std::size_t>(*lab)] : no_label).push_back(i);
	}
	std::size_t n_gold = 0;
	std::vector<double> props(corpus.n_classes);
	for (std::size_t c = 0; c < corpus.n_classes; ++c) {
		rng.shuffle(by_class[c]);
		props[c] = static_cast<double>(by_class[c].size());
		n_gold += by_class[c].size();
	}
	rng.shuffle(no_label);
	if (n_labeled + n_test > n_gold || n_labeled + n_test + n_unlabeled > corpus.documents.size())
		throw ValidationError("split sizes (" + std::to_string(n_labeled) + ", " + std::to_string(n_unlabeled) + ", " +
		                      std::to_string(n_test) + ") exceed the corpus");
	if (n_gold == 0)
		return {};

	const auto l_counts = largest_remainder(n_labeled, props);
	const auto t_counts = largest_remainder(n_test, props);
	std::vector<std::size_t> cursor(corpus.n_classes, 0);
	Split split;
	auto take = [&](std::size_t c, std::size_t k, std::vector<Document>& dst) {
		if (cursor[c] + k > by_class[c].size())
			throw ValidationError("split infeasible: class " + std::to_string(c) + " has only " +
			                      std::to_string(by_class[c].size()) + " documents");
		for (std::size_t i = 0; i < k; ++i)
			dst.push_back(corpus.documents[by_class[c][cursor[c]++]]);
	};
	for (std::size_t c = 0; c < corpus.n_classes; ++c) {
		take(c, l_counts[c], split.labeled);
		take(c, t_counts[c], split.test);
	}

	std::vector<Document> pool;
	for (std::size_t i = 0; i < std::min(n_unlabeled, no_label.size()); ++i)
		pool.push_back(corpus.documents[no_label[i]]);
	if (pool.size() < n_unlabeled) {
		std::vector<double> remaining(corpus.n_classes);
		for (std::size_t c = 0; c < corpus.n_classes; ++c)
			remaining[c] = static_cast<double>(by_class[c].size() - cursor[c]);
		auto u_counts = largest_remainder(n_unlabeled - pool.size(), remaining);
		for (std::size_t c = 0; c < corpus.n_classes; ++c)
			take(c, u_counts[c], pool);
	}

	rng.shuffle(split.labeled);
	rng.shuffle(split.test);
	rng.shuffle(pool);
	for (auto& d : pool) {
		split.unlabeled_gold.push_back(d.label ? *d.label : -1);
		d.label.reset();
		split.unlabeled.push_back(std::move(d));
	}
	return split;
}

std::vector<Document> inject_label_noise(std::span<const Document> docs, double flip_rate, std::size_t n_classes,
                                         std::uint64_t seed)
{
	if (!(flip_rate >= 0.0 && flip_rate <= 1.0))
		throw ValidationError("flip_rate must lie in [0, 1]");
	if (n_classes < 2)
		throw ValidationError("label noise needs at least 2 classes");
	std::vector<Document> out(docs.begin(), docs.end());
	const auto k = static_cast<std::size_t>(std::llround(flip_rate * static_cast<double>(out.size())));
	Rng rng(seed);
	for (std::size_t i : rng.sample_without_replacement(out.size(), k)) {
		auto& lab = out[i].label;
		if (!lab)
			throw ValidationError("cannot flip missing label of '" + out[i].id + "'");
		const auto shift = 1 + rng.below(n_classes - 1);
		lab = static_cast<int>((static_cast<std::size_t>(*lab) + shift) % n_classes);
	}
	return out;
}

std::vector<Document> inject_distractors(std::span<const Document> docs, double fraction,
                                         std::span<const double> shift, std::uint64_t seed)
{
	if (!(fraction >= 0.0 && fraction <= 1.0))
		throw ValidationError("distractor fraction must lie in [0, 1]");
	std::vector<Document> out(docs.begin(), docs.end());
	const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(out.size())));
	Rng rng(seed);
	for (std::size_t i : rng.sample_without_replacement(out.size(), k)) {
		if (out[i].features.size() != shift.size())
			throw ValidationError("distractor shift has the wrong dimension");
		for (std::size_t j = 0; j < shift.size(); ++j)
			out[i].features[j] += shift[j];
	}
	return out;
}

namespace {

constexpr char sidecar_magic[8] = {'R', 'S', 'T', 'F', 'E', 'A', 'T', '\0'};
constexpr std::uint32_t sidecar_version = 1;

template<typename T>
void put(std::ostream& out, T v)
{
	out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template<typename T>
T get(std::istream& in)
{
	T v{};
	if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
		throw ValidationError("feature sidecar truncated");
	return v;
}

}  // namespace

void write_feature_sidecar(std::ostream& out, const Corpus& corpus)
{
	out.write(sidecar_magic, sizeof sidecar_magic);
	put<std::uint32_t>(out, sidecar_version);
	put<std::uint64_t>(out, corpus.documents.size());
	put<std::uint64_t>(out, corpus.dim);
	put<std::uint64_t>(out, corpus.n_classes);
	for (const auto& d : corpus.documents) {
		put<std::uint32_t>(out, static_cast<std::uint32_t>(d.id.size()));
		out.write(d.id.data(), static_cast<std::streamsize>(d.id.size()));
		put<std::int32_t>(out, d.label ? *d.label : -1);
		std::uint32_t nnz = 0;
		for (double v : d.features)
			nnz += v != 0.0;
		put(out, nnz);
		for (std::size_t j = 0; j < d.features.size(); ++j) {
			if (d.features[j] == 0.0)
				continue;
			put<std::uint32_t>(out, static_cast<std::uint32_t>(j));
			put<double>(out, d.features[j]);
		}
	}
}

Corpus read_feature_sidecar(std::istream& in)
{
	char magic[8];
	if (!in.read(magic, sizeof magic) || std::memcmp(magic, sidecar_magic, sizeof magic) != 0)
		throw ValidationError("not a feature sidecar");
	if (const auto v = get<std::uint32_t>(in); v != sidecar_version)
		throw ValidationError("unsupported feature sidecar version " + std::to_string(v));
	Corpus c;
	const auto n = get<std::uint64_t>(in);
	c.dim = get<std::uint64_t>(in);
	c.n_classes = get<std::uint64_t>(in);
	c.provenance = "file";
	c.documents.reserve(n);
	for (std::uint64_t i = 0; i < n; ++i) {
		Document d;
		d.id.resize(get<std::uint32_t>(in));
		if (!in.read(d.id.data(), static_cast<std::streamsize>(d.id.size())))
			throw ValidationError("feature sidecar truncated");
		if (const auto lab = get<std::int32_t>(in); lab >= 0)
			d.label = lab;
		d.features.assign(c.dim, 0.0);
		const auto nnz = get<std::uint32_t>(in);
		for (std::uint32_t k = 0; k < nnz; ++k) {
			const auto j = get<std::uint32_t>(in);
			if (j >= c.dim)
				throw ValidationError("feature sidecar index out of range");
			d.features[j] = get<double>(in);
		}
		c.documents.push_back(std::move(d));
	}
	c.validate();
	return c;
}

std::uint64_t fingerprint(std::span<const Document> docs, std::uint64_t h)
{
	for (const auto& d : docs) {
		h = fnv1a(d.id, h);
		h = fnv1a_doubles(d.features, h);
		const std::int64_t lab = d.label ? *d.label : -1;
		h = fnv1a_bytes(&lab, sizeof lab, h);
	}
	return h;
}

}  // namespace rst
