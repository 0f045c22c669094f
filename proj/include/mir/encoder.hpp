#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "mir/corpus.hpp"
#include "mir/domain.hpp"
#include "mir/triplet.hpp"

namespace mir {

// Desk-scale reference encoder: mean of token-embedding rows followed by an
// affine projection. Out-of-vocabulary tokens share a reserved row.
struct EncoderParams {
    std::vector<std::string> vocab;  // row order; vocab[0] is the unknown token
    std::map<std::string, int> token_rows;
    Eigen::MatrixXd token_embeddings;  // |V| x d_in
    Eigen::MatrixXd projection;        // d_in x d_out
    Eigen::VectorXd bias;              // d_out

    int input_dim() const { return static_cast<int>(projection.rows()); }
    int output_dim() const { return static_cast<int>(projection.cols()); }
    int row_of(const std::string& token) const;
};

inline constexpr const char* kUnknownToken = "<unk>";

struct EncoderConfig {
    int d_in = 48;
    int d_out = 24;
};

// Tokens of every text reachable from the train split (proposal texts,
// cited-paper texts, citation contexts), sorted, with the unknown row first.
std::vector<std::string> build_vocab(const Mag& mag);

EncoderParams init_params(std::vector<std::string> vocab, const EncoderConfig& config,
                          std::uint64_t seed);

Eigen::VectorXd encode(const EncoderParams& params, const std::string& text);

struct TripletLossValue {
    double loss = 0.0;
    bool active = false;
};

// Margin loss on exact Euclidean distances.
TripletLossValue triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                              const Eigen::VectorXd& negative, double margin);

// A triplet group resolved to raw text, the unit the trainer consumes.
struct TextTriplet {
    std::string anchor, positive, negative;
};

struct TextTripletGroup {
    TextTriplet t1, t2, t3;
    std::array<NegativeClass, 3> negative_class{NegativeClass::soft, NegativeClass::soft,
                                                NegativeClass::soft};
};

TextTripletGroup resolve_group(const Mag& mag, const TripletGroup& group);

// Sum of the three margin losses of a group under the current parameters.
double joint_sample_loss(const EncoderParams& params, const TextTripletGroup& group, double margin);

struct BatchLoss {
    double joint = 0.0;  // mean over the batch of per-sample sums
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;  // per-kind means
    double active_fraction = 0.0;
};

// Batch-mean loss with the epsilon-smoothed distance the gradient uses.
BatchLoss batch_loss(const EncoderParams& params, const std::vector<TextTripletGroup>& batch,
                     double margin);

struct Gradients {
    Eigen::MatrixXd token_embeddings;
    Eigen::MatrixXd projection;
    Eigen::VectorXd bias;
};

// Analytic gradient of batch_loss().joint. Inactive triplets contribute the
// zero subgradient.
Gradients grad(const EncoderParams& params, const std::vector<TextTripletGroup>& batch,
               double margin);

struct TrainConfig {
    double margin = 1.0;
    double learning_rate = 1e-2;
    int epochs = 1;
    int batch_size = 4;
    double alpha = 0.5;
    std::uint64_t seed = 0;
    EncoderConfig encoder;
};

struct LossReport {
    int epoch = 0;
    int batch_index = 0;
    BatchLoss loss;
};

struct TrainResult {
    EncoderParams params;
    std::vector<LossReport> reports;
    std::vector<SkipRecord> skips;
};

// Plain gradient descent over per-epoch resynthesized triplet groups.
// Deterministic for a fixed (mag, corpus, configs) tuple.
TrainResult train(const Mag& mag, const std::vector<std::string>& corpus_ids,
                  const DomainVectorStore* vectors, const SynthConfig& synth_config,
                  const TrainConfig& train_config);

std::string loss_reports_to_jsonl(const std::vector<LossReport>& reports);

// Versioned binary checkpoint ("MIRT").
std::string save_checkpoint(const EncoderParams& params);
EncoderParams load_checkpoint(const std::string& bytes);

// TextEmbedder view over trained parameters, for retrieval and for domain
// vectors computed with the reference encoder.
class ReferenceEncoder : public TextEmbedder {
public:
    explicit ReferenceEncoder(EncoderParams params) : params_(std::move(params)) {}
    int dim() const override { return params_.output_dim(); }
    std::vector<double> embed(const std::string& text) const override;
    const EncoderParams& params() const { return params_; }

private:
    EncoderParams params_;
};

}  // namespace mir
