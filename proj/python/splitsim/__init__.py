"""Split computing toolkit: saliency-guided CNN splitting plus a lossy-channel simulator."""

from splitsim._core import (  # noqa: F401
    ActivationMap,
    AdviceEntry,
    BottleneckSpec,
    BottleneckTrainResult,
    ChannelConfig,
    ChannelWeights,
    ComputeConfig,
    CSCurve,
    Dataset,
    DeliveryReport,
    LayerKind,
    LayerSpec,
    LayerStat,
    Mode,
    ModelGraph,
    ModelProfile,
    ModelStats,
    Protocol,
    QosConfig,
    QosResult,
    ScenarioConfig,
    SimReport,
    SplitAccuracy,
    SplitPlan,
    Tensor,
    TrainConfig,
    TrainResult,
    TransportConfig,
    advise,
    build_toy_cnn,
    bytes_to_mb,
    candidate_split_points,
    channel_weights,
    class_activation_map,
    cumulative_saliency,
    decode,
    effective_rate_bps,
    encode,
    evaluate_accuracy,
    evaluate_qos,
    find_layer,
    finetune,
    forward,
    frame_latency,
    generate_dataset,
    head_forward,
    latent_elements,
    layer_table,
    load_checkpoint,
    load_profile,
    load_split_checkpoint,
    make_spliced_model,
    make_split,
    model_stats,
    parse_profile,
    predict,
    profile_of,
    profile_payload_bytes,
    range_mult_adds,
    run_model_scenario,
    run_profile_scenario,
    saliency_eligible_layers,
    save_checkpoint,
    save_split_checkpoint,
    split_infer,
    split_payload_bytes,
    split_predict,
    tail_forward,
    train,
    train_bottleneck,
    transmit_frame,
    vgg16_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
