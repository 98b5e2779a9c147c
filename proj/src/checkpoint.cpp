#include <fstream>

#include <nlohmann/json.hpp>

#include "fintwit/common.hpp"
#include "fintwit/nnet.hpp"

namespace fintwit::nnet {

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["arch"] = arch_name(c.arch);
    j["rows"] = c.rows;
    j["cols"] = c.cols;
    j["conv_blocks"] = c.conv_blocks;
    j["channels1"] = c.channels1;
    j["channels2"] = c.channels2;
    j["dense_hidden"] = c.dense_hidden;
    j["lstm_hidden"] = c.lstm_hidden;
    j["l2"] = c.l2;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.arch = arch_from_name(j.at("arch").get<std::string>());
    c.rows = j.at("rows").get<int>();
    c.cols = j.at("cols").get<int>();
    c.conv_blocks = j.at("conv_blocks").get<int>();
    c.channels1 = j.at("channels1").get<int>();
    c.channels2 = j.at("channels2").get<int>();
    c.dense_hidden = j.at("dense_hidden").get<int>();
    c.lstm_hidden = j.at("lstm_hidden").get<int>();
    c.l2 = j.at("l2").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    nlohmann::ordered_json j;
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(model.config);

    nlohmann::ordered_json scaler;
    scaler["mean"] = std::vector<double>(model.scaler.mean().data(),
                                         model.scaler.mean().data() + model.scaler.mean().size());
    scaler["std"] = std::vector<double>(
        model.scaler.stddev().data(),
        model.scaler.stddev().data() + model.scaler.stddev().size());
    j["scaler"] = std::move(scaler);

    nlohmann::ordered_json weights;
    for (const auto& [name, m] : model.weights) {
        nlohmann::ordered_json t;
        t["shape"] = {m.rows(), m.cols()};
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
        }
        t["data"] = std::move(data);
        weights[name] = std::move(t);
    }
    j["weights"] = std::move(weights);

    nlohmann::ordered_json hist;
    hist["best_epoch"] = model.history.best_epoch;
    hist["best_val_acc"] = model.history.best_val_acc;
    auto epochs = nlohmann::ordered_json::array();
    for (const auto& e : model.history.epochs) {
        epochs.push_back({{"train_loss", e.train_loss},
                          {"train_acc", e.train_acc},
                          {"val_acc", e.val_acc},
                          {"weight_norm", e.weight_norm}});
    }
    hist["epochs"] = std::move(epochs);
    j["train_history"] = std::move(hist);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FatalError("cannot write checkpoint: " + path);
    out << j.dump(2) << '\n';
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("version")) throw FatalError("checkpoint missing version field: " + path);
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw FatalError("unsupported checkpoint version in " + path);
    }

    TrainedModel model;
    model.config = config_from_json(j.at("config"));

    const auto mean_v = j.at("scaler").at("mean").get<std::vector<double>>();
    const auto std_v = j.at("scaler").at("std").get<std::vector<double>>();
    Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(mean_v.data(), mean_v.size());
    Eigen::VectorXd stddev = Eigen::Map<const Eigen::VectorXd>(std_v.data(), std_v.size());
    model.scaler = feat::Scaler::from_params(std::move(mean), std::move(stddev));

    Network net(model.config);
    model.weights = net.params();
    for (auto& [name, m] : model.weights) {
        const auto& t = j.at("weights").at(name);
        const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
        if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols()) {
            throw FatalError("checkpoint weight shape mismatch for " + name);
        }
        const auto data = t.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(data.size()) != m.size()) {
            throw FatalError("checkpoint weight size mismatch for " + name);
        }
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
        }
    }

    const auto& hist = j.at("train_history");
    model.history.best_epoch = hist.at("best_epoch").get<int>();
    model.history.best_val_acc = hist.at("best_val_acc").get<double>();
    for (const auto& e : hist.at("epochs")) {
        EpochStats s;
        s.train_loss = e.at("train_loss").get<double>();
        s.train_acc = e.at("train_acc").get<double>();
        s.val_acc = e.at("val_acc").get<double>();
        s.weight_norm = e.value("weight_norm", 0.0);
        model.history.epochs.push_back(s);
    }
    return model;
}

}  // namespace fintwit::nnet
