#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "splitsim/checkpoint.hpp"
#include "splitsim/dataset.hpp"
#include "splitsim/model.hpp"
#include "splitsim/netsim.hpp"
#include "splitsim/profile.hpp"
#include "splitsim/saliency.hpp"
#include "splitsim/scenario.hpp"
#include "splitsim/split.hpp"
#include "splitsim/train.hpp"

namespace py = pybind11;
using namespace splitsim;

namespace {

Tensor tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    std::vector<int> shape;
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        shape.push_back(static_cast<int>(arr.shape(i)));
    Tensor t(shape);
    const double* src = arr.data();
    std::copy(src, src + t.data.size(), t.data.begin());
    return t;
}

py::array_t<double> tensor_to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> arr(shape);
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "split computing toolkit core";

    py::class_<Tensor>(m, "Tensor")
        .def(py::init<std::vector<int>>(), py::arg("shape"))
        .def_readonly("shape", &Tensor::shape)
        .def_property_readonly("data", [](const Tensor& t) { return t.data; })
        .def("numpy", &tensor_to_numpy)
        .def_static("from_numpy", &tensor_from_numpy, py::arg("array"))
        .def("__len__", [](const Tensor& t) { return t.data.size(); });

    py::enum_<LayerKind>(m, "LayerKind")
        .value("Conv2D", LayerKind::Conv2D)
        .value("ReLU", LayerKind::ReLU)
        .value("MaxPool2D", LayerKind::MaxPool2D)
        .value("Flatten", LayerKind::Flatten)
        .value("Dense", LayerKind::Dense);

    py::class_<LayerSpec>(m, "LayerSpec")
        .def_readonly("kind", &LayerSpec::kind)
        .def_readonly("name", &LayerSpec::name)
        .def_readonly("in_channels", &LayerSpec::in_channels)
        .def_readonly("out_channels", &LayerSpec::out_channels)
        .def_readonly("kernel", &LayerSpec::kernel)
        .def_readonly("stride", &LayerSpec::stride)
        .def_readonly("padding", &LayerSpec::padding)
        .def_readonly("in_features", &LayerSpec::in_features)
        .def_readonly("out_features", &LayerSpec::out_features);

    py::class_<ModelGraph>(m, "ModelGraph")
        .def_property_readonly("layers", &ModelGraph::layers)
        .def_property_readonly("input_shape", &ModelGraph::input_shape)
        .def_property_readonly("num_classes", &ModelGraph::num_classes)
        .def_property_readonly("param_count", &ModelGraph::param_count)
        .def_readonly("trained_epochs", &ModelGraph::trained_epochs);

    m.def("build_toy_cnn", &build_toy_cnn, py::arg("num_classes") = 4, py::arg("seed") = 42);
    m.def("forward",
          [](const ModelGraph& model, const Tensor& input) {
              return forward(model, input).data;
          },
          py::arg("model"), py::arg("input"));
    m.def("predict", &predict, py::arg("model"), py::arg("input"));

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("size", &Dataset::size)
        .def_readonly("labels", &Dataset::labels)
        .def_readonly("num_classes", &Dataset::num_classes)
        .def_readonly("split", &Dataset::split)
        .def("histogram", &Dataset::histogram)
        .def("input", [](const Dataset& d, int i) {
            if (i < 0 || i >= d.size()) throw py::index_error();
            return d.inputs[static_cast<std::size_t>(i)];
        });

    m.def("generate_dataset", &generate_dataset, py::arg("seed"), py::arg("n_train"),
          py::arg("n_test"), py::arg("num_classes") = 4);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("loss_history", &TrainResult::loss_history);

    m.def("train", &train, py::arg("model"), py::arg("data"), py::arg("config"),
          py::arg("frozen_layers") = std::vector<int>{});
    m.def("evaluate_accuracy", &evaluate_accuracy, py::arg("model"), py::arg("data"));

    m.def("save_checkpoint",
          [](const ModelGraph& model, const std::string& path) {
              save_checkpoint(model, path);
          },
          py::arg("model"), py::arg("path"));
    m.def("load_checkpoint",
          [](const std::string& path) { return load_checkpoint(path); }, py::arg("path"));

    py::class_<ChannelWeights>(m, "ChannelWeights")
        .def_readonly("layer_index", &ChannelWeights::layer_index)
        .def_readonly("class_index", &ChannelWeights::class_index)
        .def_readonly("weights", &ChannelWeights::weights);
    py::class_<ActivationMap>(m, "ActivationMap")
        .def_readonly("layer_index", &ActivationMap::layer_index)
        .def_readonly("class_index", &ActivationMap::class_index)
        .def_readonly("height", &ActivationMap::height)
        .def_readonly("width", &ActivationMap::width)
        .def_readonly("map", &ActivationMap::map);
    py::class_<CSCurve>(m, "CSCurve")
        .def_readonly("eligible_layers", &CSCurve::eligible_layers)
        .def_readonly("values", &CSCurve::values)
        .def_readonly("candidates", &CSCurve::candidates);

    m.def("saliency_eligible_layers", &saliency_eligible_layers, py::arg("model"));
    m.def("channel_weights", &channel_weights, py::arg("model"), py::arg("input"),
          py::arg("class_index"), py::arg("layer_index"));
    m.def("class_activation_map", &class_activation_map, py::arg("model"), py::arg("input"),
          py::arg("class_index"), py::arg("layer_index"));
    m.def("cumulative_saliency", &cumulative_saliency, py::arg("model"), py::arg("data"));
    m.def("candidate_split_points", &candidate_split_points, py::arg("eligible_layers"),
          py::arg("values"));

    py::class_<BottleneckSpec>(m, "BottleneckSpec")
        .def_readonly("target_layer", &BottleneckSpec::target_layer)
        .def_readonly("compression_rate", &BottleneckSpec::compression_rate)
        .def_readonly("channels", &BottleneckSpec::channels)
        .def_readonly("latent_channels", &BottleneckSpec::latent_channels)
        .def_readonly("height", &BottleneckSpec::height)
        .def_readonly("width", &BottleneckSpec::width);
    py::class_<SplitPlan>(m, "SplitPlan")
        .def_readonly("head_end", &SplitPlan::head_end)
        .def_readonly("bottleneck", &SplitPlan::bottleneck)
        .def_property_readonly("base", [](const SplitPlan& p) { return p.base; });
    py::class_<BottleneckTrainResult>(m, "BottleneckTrainResult")
        .def_readonly("loss_history", &BottleneckTrainResult::loss_history);
    py::class_<SplitAccuracy>(m, "SplitAccuracy")
        .def_readonly("accuracy", &SplitAccuracy::accuracy)
        .def_readonly("reconstruction_mse", &SplitAccuracy::reconstruction_mse);

    m.def("make_split", &make_split, py::arg("model"), py::arg("target_layer"),
          py::arg("rho") = 0.5, py::arg("seed") = 0xb07713ull);
    m.def("latent_elements", &latent_elements, py::arg("plan"));
    m.def("split_payload_bytes", [](const SplitPlan& plan) { return payload_bytes(plan); },
          py::arg("plan"));
    m.def("head_forward", &head_forward, py::arg("plan"), py::arg("input"));
    m.def("encode", &encode, py::arg("plan"), py::arg("activation"));
    m.def("decode", &decode, py::arg("plan"), py::arg("latent"));
    m.def("tail_forward", &tail_forward, py::arg("plan"), py::arg("reconstruction"));
    m.def("make_spliced_model", &make_spliced_model, py::arg("plan"));
    m.def("split_predict", &split_predict, py::arg("plan"), py::arg("input"));
    m.def("train_bottleneck", &train_bottleneck, py::arg("plan"), py::arg("train_data"),
          py::arg("config"));
    m.def("finetune", &finetune, py::arg("plan"), py::arg("train_data"), py::arg("test_data"),
          py::arg("config"));
    m.def("split_infer", &split_infer, py::arg("plan"), py::arg("input"),
          py::arg("delivered"));
    m.def("save_split_checkpoint",
          [](const SplitPlan& plan, const std::string& path) {
              save_split_checkpoint(plan, path);
          },
          py::arg("plan"), py::arg("path"));
    m.def("load_split_checkpoint",
          [](const std::string& path) { return load_split_checkpoint(path); },
          py::arg("path"));

    py::class_<ModelProfile>(m, "ModelProfile")
        .def_readonly("name", &ModelProfile::name)
        .def_readonly("input_shape", &ModelProfile::input_shape)
        .def_property_readonly("layer_count",
                               [](const ModelProfile& p) { return p.layers.size(); })
        .def_readonly("layers", &ModelProfile::layers);
    py::class_<LayerStat>(m, "LayerStat")
        .def_readonly("name", &LayerStat::name)
        .def_readonly("kind", &LayerStat::kind)
        .def_readonly("output_shape", &LayerStat::output_shape)
        .def_readonly("param_count", &LayerStat::param_count)
        .def_readonly("mult_adds", &LayerStat::mult_adds);
    py::class_<ModelStats>(m, "ModelStats")
        .def_readonly("total_params", &ModelStats::total_params)
        .def_readonly("trainable_params", &ModelStats::trainable_params)
        .def_readonly("total_mult_adds", &ModelStats::total_mult_adds)
        .def_readonly("input_bytes", &ModelStats::input_bytes)
        .def_readonly("forward_backward_bytes", &ModelStats::forward_backward_bytes)
        .def_readonly("param_bytes", &ModelStats::param_bytes)
        .def_readonly("estimated_total_bytes", &ModelStats::estimated_total_bytes);

    m.def("vgg16_profile", &vgg16_profile);
    m.def("load_profile", &load_profile, py::arg("path"));
    m.def("parse_profile",
          [](const std::string& text, const std::string& source) {
              std::istringstream in(text);
              return parse_profile(in, source);
          },
          py::arg("text"), py::arg("source") = "<string>");
    m.def("profile_of", &profile_of, py::arg("model"), py::arg("name") = "model");
    m.def("layer_table", &layer_table, py::arg("profile"), py::arg("batch") = 16);
    m.def("model_stats", &model_stats, py::arg("profile"), py::arg("batch") = 16);
    m.def("range_mult_adds", &range_mult_adds, py::arg("profile"), py::arg("first"),
          py::arg("last"), py::arg("batch") = 1);
    m.def("find_layer", &find_layer, py::arg("profile"), py::arg("name"));
    m.def("profile_payload_bytes",
          [](const ModelProfile& p, int layer, double rho) {
              bool degenerate = false;
              const std::int64_t bytes = profile_payload_bytes(p, layer, rho, &degenerate);
              return py::make_tuple(bytes, degenerate);
          },
          py::arg("profile"), py::arg("layer_index"), py::arg("rho") = 0.5);
    m.def("bytes_to_mb", &bytes_to_mb, py::arg("bytes"));

    py::enum_<Protocol>(m, "Protocol")
        .value("TCP", Protocol::TCP)
        .value("UDP", Protocol::UDP);
    py::class_<ChannelConfig>(m, "ChannelConfig")
        .def(py::init<>())
        .def_readwrite("latency_s", &ChannelConfig::latency_s)
        .def_readwrite("capacity_bps", &ChannelConfig::capacity_bps)
        .def_readwrite("interface_bps", &ChannelConfig::interface_bps)
        .def_readwrite("loss_rate", &ChannelConfig::loss_rate);
    py::class_<TransportConfig>(m, "TransportConfig")
        .def(py::init<>())
        .def_readwrite("protocol", &TransportConfig::protocol)
        .def_readwrite("mtu_bytes", &TransportConfig::mtu_bytes)
        .def_readwrite("window", &TransportConfig::window)
        .def_readwrite("rto_multiplier", &TransportConfig::rto_multiplier)
        .def_readwrite("max_retries", &TransportConfig::max_retries);
    py::class_<DeliveryReport>(m, "DeliveryReport")
        .def_readonly("failed", &DeliveryReport::failed)
        .def_readonly("completion_s", &DeliveryReport::completion_s)
        .def_readonly("packets_sent", &DeliveryReport::packets_sent)
        .def_readonly("retransmissions", &DeliveryReport::retransmissions)
        .def_property_readonly("delivered", [](const DeliveryReport& r) {
            return py::bytes(reinterpret_cast<const char*>(r.delivered.data()),
                             r.delivered.size());
        });

    m.def("effective_rate_bps", &effective_rate_bps, py::arg("channel"));
    m.def("transmit_frame",
          [](std::int64_t payload, const ChannelConfig& channel,
             const TransportConfig& transport, std::uint64_t seed) {
              return transmit_frame(payload, channel, transport, seed);
          },
          py::arg("payload_bytes"), py::arg("channel"), py::arg("transport"),
          py::arg("seed"));

    py::enum_<Mode>(m, "Mode")
        .value("LC", Mode::LC)
        .value("RC", Mode::RC)
        .value("SC", Mode::SC);
    py::class_<ComputeConfig>(m, "ComputeConfig")
        .def(py::init<>())
        .def_readwrite("edge_mult_adds_per_s", &ComputeConfig::edge_mult_adds_per_s)
        .def_readwrite("server_mult_adds_per_s", &ComputeConfig::server_mult_adds_per_s);
    py::class_<QosConfig>(m, "QosConfig")
        .def(py::init<>())
        .def_readwrite("max_latency_s", &QosConfig::max_latency_s)
        .def_readwrite("min_accuracy", &QosConfig::min_accuracy);
    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("mode", &ScenarioConfig::mode)
        .def_readwrite("frame_count", &ScenarioConfig::frame_count)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("channel", &ScenarioConfig::channel)
        .def_readwrite("transport", &ScenarioConfig::transport)
        .def_readwrite("compute", &ScenarioConfig::compute)
        .def_readwrite("qos", &ScenarioConfig::qos);
    py::class_<SimReport>(m, "SimReport")
        .def_readonly("mode", &SimReport::mode)
        .def_readonly("protocol", &SimReport::protocol)
        .def_readonly("total_frames", &SimReport::total_frames)
        .def_readonly("dropped_frames", &SimReport::dropped_frames)
        .def_readonly("accuracy", &SimReport::accuracy)
        .def_readonly("mean_latency_s", &SimReport::mean_latency_s)
        .def_readonly("p95_latency_s", &SimReport::p95_latency_s)
        .def_readonly("qos_pass", &SimReport::qos_pass)
        .def_readonly("total_retransmissions", &SimReport::total_retransmissions)
        .def_readonly("frame_latencies_s", &SimReport::frame_latencies_s);

    m.def("frame_latency", &frame_latency, py::arg("mode"), py::arg("edge_mult_adds"),
          py::arg("completion_s"), py::arg("server_mult_adds"), py::arg("compute"));
    m.def("run_model_scenario",
          [](const ScenarioConfig& cfg, const ModelGraph* model, const SplitPlan* plan,
             const Dataset& frames) {
              ModelScenario in;
              in.model = model;
              in.plan = plan;
              in.frames = &frames;
              return run_scenario(cfg, in);
          },
          py::arg("config"), py::arg("model") = nullptr, py::arg("plan") = nullptr,
          py::arg("frames"));
    m.def("run_profile_scenario",
          [](const ScenarioConfig& cfg, const ModelProfile& profile, int split_layer,
             double rho, double table_accuracy) {
              ProfileScenario in;
              in.profile = &profile;
              in.split_layer = split_layer;
              in.rho = rho;
              in.table_accuracy = table_accuracy;
              return run_scenario(cfg, in);
          },
          py::arg("config"), py::arg("profile"), py::arg("split_layer") = -1,
          py::arg("rho") = 0.5, py::arg("table_accuracy") = 1.0);

    py::class_<QosResult>(m, "QosResult")
        .def_readonly("pass_", &QosResult::pass)
        .def_readonly("margin", &QosResult::margin);
    m.def("evaluate_qos", &evaluate_qos, py::arg("report"), py::arg("qos"));

    py::class_<AdviceEntry>(m, "AdviceEntry")
        .def_readonly("label", &AdviceEntry::label)
        .def_readonly("qos_pass", &AdviceEntry::qos_pass)
        .def_readonly("margin", &AdviceEntry::margin)
        .def_readonly("accuracy", &AdviceEntry::accuracy)
        .def_readonly("mean_latency_s", &AdviceEntry::mean_latency_s);
    m.def("advise",
          [](const std::vector<std::pair<std::string, SimReport>>& candidates,
             const QosConfig& qos) {
              std::vector<AdviceCandidate> in;
              in.reserve(candidates.size());
              for (const auto& [label, report] : candidates) in.push_back({label, report});
              return advise(in, qos);
          },
          py::arg("candidates"), py::arg("qos"));
}
