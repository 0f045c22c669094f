#include "mir/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mir {

namespace {

constexpr double kDistanceEps = 1e-12;  // smoothing under the sqrt, for gradients

double smoothed_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::sqrt((a - b).squaredNorm() + kDistanceEps);
}

std::vector<int> token_rows_of(const EncoderParams& params, const std::string& text) {
    std::vector<int> rows;
    for (const std::string& tok : tokenize(text)) rows.push_back(params.row_of(tok));
    return rows;
}

Eigen::VectorXd mean_embedding(const EncoderParams& params, const std::vector<int>& rows) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(params.input_dim());
    if (rows.empty()) return mean;
    for (int r : rows) mean += params.token_embeddings.row(r).transpose();
    mean /= static_cast<double>(rows.size());
    return mean;
}

struct EncodedText {
    std::vector<int> rows;
    Eigen::VectorXd mean;  // d_in
    Eigen::VectorXd out;   // d_out
};

EncodedText encode_for_grad(const EncoderParams& params, const std::string& text) {
    EncodedText enc;
    enc.rows = token_rows_of(params, text);
    enc.mean = mean_embedding(params, enc.rows);
    enc.out = params.projection.transpose() * enc.mean + params.bias;
    return enc;
}

}  // namespace

int EncoderParams::row_of(const std::string& token) const {
    auto it = token_rows.find(token);
    return it == token_rows.end() ? 0 : it->second;
}

std::vector<std::string> build_vocab(const Mag& mag) {
    std::set<std::string> tokens;
    auto add = [&](const std::string& text) {
        for (std::string& tok : tokenize(text)) tokens.insert(std::move(tok));
    };
    for (const auto& [pid, prop] : mag.proposals()) {
        if (prop.split != Split::train) continue;
        add(prop.problem);
        add(prop.motivation);
        for (const CitationEdge& e : mag.edges_of(pid)) {
            const PaperRecord& paper = mag.paper(e.paper_id);
            add(paper.title);
            add(paper.abstract_text);
            for (const CitationContext& c : e.contexts) add(c.text);
        }
    }
    std::vector<std::string> vocab;
    vocab.reserve(tokens.size() + 1);
    vocab.push_back(kUnknownToken);
    vocab.insert(vocab.end(), tokens.begin(), tokens.end());
    return vocab;
}

EncoderParams init_params(std::vector<std::string> vocab, const EncoderConfig& config,
                          std::uint64_t seed) {
    if (config.d_in < 1 || config.d_out < 1) throw std::invalid_argument("encoder dims must be positive");
    if (vocab.empty() || vocab.front() != kUnknownToken) {
        throw std::invalid_argument("vocab must start with the reserved unknown token");
    }
    EncoderParams p;
    p.vocab = std::move(vocab);
    for (std::size_t i = 0; i < p.vocab.size(); ++i) {
        if (!p.token_rows.emplace(p.vocab[i], static_cast<int>(i)).second) {
            throw std::invalid_argument("duplicate vocab token: " + p.vocab[i]);
        }
    }
    Rng rng(substream_seed(seed, "encoder-init"));
    auto draw = [&] { return uniform_in(rng, -0.05, 0.05); };
    p.token_embeddings.resize(static_cast<Eigen::Index>(p.vocab.size()), config.d_in);
    for (Eigen::Index i = 0; i < p.token_embeddings.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.token_embeddings.cols(); ++j) p.token_embeddings(i, j) = draw();
    }
    p.projection.resize(config.d_in, config.d_out);
    for (Eigen::Index i = 0; i < p.projection.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.projection.cols(); ++j) p.projection(i, j) = draw();
    }
    p.bias.resize(config.d_out);
    for (Eigen::Index j = 0; j < p.bias.size(); ++j) p.bias(j) = draw();
    return p;
}

Eigen::VectorXd encode(const EncoderParams& params, const std::string& text) {
    const std::vector<int> rows = token_rows_of(params, text);
    return params.projection.transpose() * mean_embedding(params, rows) + params.bias;
}

TripletLossValue triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                              const Eigen::VectorXd& negative, double margin) {
    if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
        throw std::invalid_argument("triplet_loss: dimension mismatch");
    }
    if (margin < 0.0) throw std::invalid_argument("margin must be >= 0");
    const double d_pos = (anchor - positive).norm();
    const double d_neg = (anchor - negative).norm();
    const double raw = d_pos - d_neg + margin;
    TripletLossValue v;
    v.loss = raw > 0.0 ? raw : 0.0;
    v.active = raw > 0.0;
    return v;
}

TextTripletGroup resolve_group(const Mag& mag, const TripletGroup& group) {
    TextTripletGroup out;
    auto fill = [&](const Triplet& t, TextTriplet& dst) {
        dst.anchor = resolve_text(mag, t.anchor);
        dst.positive = resolve_text(mag, t.positive);
        dst.negative = resolve_text(mag, t.negative);
    };
    fill(group.t1, out.t1);
    fill(group.t2, out.t2);
    fill(group.t3, out.t3);
    out.negative_class = {group.t1.negative_class, group.t2.negative_class, group.t3.negative_class};
    return out;
}

double joint_sample_loss(const EncoderParams& params, const TextTripletGroup& group, double margin) {
    double total = 0.0;
    for (const TextTriplet* t : {&group.t1, &group.t2, &group.t3}) {
        total += triplet_loss(encode(params, t->anchor), encode(params, t->positive),
                              encode(params, t->negative), margin)
                     .loss;
    }
    return total;
}

BatchLoss batch_loss(const EncoderParams& params, const std::vector<TextTripletGroup>& batch,
                     double margin) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    BatchLoss bl;
    std::size_t active = 0;
    for (const TextTripletGroup& g : batch) {
        double kind_loss[3] = {0, 0, 0};
        const TextTriplet* ts[3] = {&g.t1, &g.t2, &g.t3};
        for (int k = 0; k < 3; ++k) {
            const Eigen::VectorXd a = encode(params, ts[k]->anchor);
            const Eigen::VectorXd p = encode(params, ts[k]->positive);
            const Eigen::VectorXd n = encode(params, ts[k]->negative);
            const double raw = smoothed_distance(a, p) - smoothed_distance(a, n) + margin;
            if (raw > 0.0) {
                kind_loss[k] = raw;
                ++active;
            }
        }
        bl.t1 += kind_loss[0];
        bl.t2 += kind_loss[1];
        bl.t3 += kind_loss[2];
        bl.joint += kind_loss[0] + kind_loss[1] + kind_loss[2];
    }
    const double b = static_cast<double>(batch.size());
    bl.joint /= b;
    bl.t1 /= b;
    bl.t2 /= b;
    bl.t3 /= b;
    bl.active_fraction = static_cast<double>(active) / (3.0 * b);
    return bl;
}

Gradients grad(const EncoderParams& params, const std::vector<TextTripletGroup>& batch,
               double margin) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    Gradients g;
    g.token_embeddings = Eigen::MatrixXd::Zero(params.token_embeddings.rows(), params.token_embeddings.cols());
    g.projection = Eigen::MatrixXd::Zero(params.projection.rows(), params.projection.cols());
    g.bias = Eigen::VectorXd::Zero(params.bias.size());

    const double scale = 1.0 / static_cast<double>(batch.size());

    // dL/d(output vector) flows back through the affine projection and the
    // token mean; duplicated tokens accumulate their share.
    auto backprop_text = [&](const EncodedText& enc, const Eigen::VectorXd& d_out) {
        g.bias += scale * d_out;
        g.projection += scale * (enc.mean * d_out.transpose());
        if (enc.rows.empty()) return;
        const Eigen::VectorXd d_mean = params.projection * d_out;
        const double inv = 1.0 / static_cast<double>(enc.rows.size());
        for (int r : enc.rows) {
            g.token_embeddings.row(r) += scale * inv * d_mean.transpose();
        }
    };

    for (const TextTripletGroup& group : batch) {
        const TextTriplet* ts[3] = {&group.t1, &group.t2, &group.t3};
        for (const TextTriplet* t : ts) {
            const EncodedText a = encode_for_grad(params, t->anchor);
            const EncodedText p = encode_for_grad(params, t->positive);
            const EncodedText n = encode_for_grad(params, t->negative);
            const double d_pos = smoothed_distance(a.out, p.out);
            const double d_neg = smoothed_distance(a.out, n.out);
            if (d_pos - d_neg + margin <= 0.0) continue;
            const Eigen::VectorXd u_pos = (a.out - p.out) / d_pos;
            const Eigen::VectorXd u_neg = (a.out - n.out) / d_neg;
            backprop_text(a, u_pos - u_neg);
            backprop_text(p, -u_pos);
            backprop_text(n, u_neg);
        }
    }
    return g;
}

TrainResult train(const Mag& mag, const std::vector<std::string>& corpus_ids,
                  const DomainVectorStore* vectors, const SynthConfig& synth_config,
                  const TrainConfig& train_config) {
    if (train_config.epochs < 1 || train_config.batch_size < 1) {
        throw std::invalid_argument("epochs and batch_size must be >= 1");
    }
    TrainResult result;
    result.params = init_params(build_vocab(mag), train_config.encoder, train_config.seed);

    bool any_sample = false;
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        SynthResult sr = synthesize_epoch(mag, corpus_ids, vectors, synth_config, epoch);
        std::move(sr.skips.begin(), sr.skips.end(), std::back_inserter(result.skips));
        if (sr.groups.empty()) continue;
        any_sample = true;

        std::vector<TextTripletGroup> resolved;
        resolved.reserve(sr.groups.size());
        for (const TripletGroup& g : sr.groups) resolved.push_back(resolve_group(mag, g));

        int batch_index = 0;
        for (std::size_t start = 0; start < resolved.size(); start += train_config.batch_size) {
            const std::size_t end = std::min(resolved.size(), start + train_config.batch_size);
            const std::vector<TextTripletGroup> batch(resolved.begin() + start, resolved.begin() + end);
            const BatchLoss bl = batch_loss(result.params, batch, train_config.margin);
            const Gradients g = grad(result.params, batch, train_config.margin);
            result.params.token_embeddings -= train_config.learning_rate * g.token_embeddings;
            result.params.projection -= train_config.learning_rate * g.projection;
            result.params.bias -= train_config.learning_rate * g.bias;
            result.reports.push_back({epoch, batch_index++, bl});
        }
    }
    if (!any_sample) throw std::runtime_error("no trainable samples (no train proposal has an MI citation)");
    return result;
}

std::string loss_reports_to_jsonl(const std::vector<LossReport>& reports) {
    std::ostringstream out;
    for (const LossReport& r : reports) {
        out << json{{"epoch", r.epoch},
                    {"batch", r.batch_index},
                    {"t1", r.loss.t1},
                    {"t2", r.loss.t2},
                    {"t3", r.loss.t3},
                    {"joint", r.loss.joint},
                    {"active_fraction", r.loss.active_fraction}}
                   .dump()
            << '\n';
    }
    return out.str();
}

std::string save_checkpoint(const EncoderParams& params) {
    std::string out;
    out += "MIRT";
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(params.input_dim()));
    put_u32(out, static_cast<std::uint32_t>(params.output_dim()));
    put_u64(out, static_cast<std::uint64_t>(params.vocab.size()));
    for (const std::string& tok : params.vocab) {
        if (tok.size() > 0xffff) throw std::runtime_error("vocab token too long: " + tok);
        put_u16(out, static_cast<std::uint16_t>(tok.size()));
        out += tok;
    }
    for (Eigen::Index i = 0; i < params.token_embeddings.rows(); ++i) {
        for (Eigen::Index j = 0; j < params.token_embeddings.cols(); ++j) {
            put_f32(out, static_cast<float>(params.token_embeddings(i, j)));
        }
    }
    for (Eigen::Index i = 0; i < params.projection.rows(); ++i) {
        for (Eigen::Index j = 0; j < params.projection.cols(); ++j) {
            put_f32(out, static_cast<float>(params.projection(i, j)));
        }
    }
    for (Eigen::Index j = 0; j < params.bias.size(); ++j) put_f32(out, static_cast<float>(params.bias(j)));
    return out;
}

EncoderParams load_checkpoint(const std::string& bytes) {
    ByteReader r(bytes);
    if (r.bytes(4) != "MIRT") throw std::runtime_error("not a checkpoint file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const int d_in = static_cast<int>(r.u32());
    const int d_out = static_cast<int>(r.u32());
    const std::uint64_t vocab_size = r.u64();
    EncoderParams p;
    p.vocab.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        const std::uint16_t len = r.u16();
        p.vocab.push_back(r.bytes(len));
        p.token_rows.emplace(p.vocab.back(), static_cast<int>(i));
    }
    if (p.vocab.empty() || p.vocab.front() != kUnknownToken) {
        throw std::runtime_error("checkpoint vocab lacks the reserved unknown token");
    }
    p.token_embeddings.resize(static_cast<Eigen::Index>(vocab_size), d_in);
    for (Eigen::Index i = 0; i < p.token_embeddings.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.token_embeddings.cols(); ++j) p.token_embeddings(i, j) = r.f32();
    }
    p.projection.resize(d_in, d_out);
    for (Eigen::Index i = 0; i < d_in; ++i) {
        for (Eigen::Index j = 0; j < d_out; ++j) p.projection(i, j) = r.f32();
    }
    p.bias.resize(d_out);
    for (Eigen::Index j = 0; j < d_out; ++j) p.bias(j) = r.f32();
    if (!r.done()) throw std::runtime_error("trailing bytes in checkpoint");
    return p;
}

std::vector<double> ReferenceEncoder::embed(const std::string& text) const {
    const Eigen::VectorXd v = encode(params_, text);
    return {v.data(), v.data() + v.size()};
}

}  // namespace mir
