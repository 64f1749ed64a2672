"""Entropy-based IoT traffic anomaly detection with adaptive thresholds.

The pipeline: ingest packets (pcap or summary CSV), group them into tumbling
windows, build per-device feature distributions, score each window's
normalized entropy, and compare against per-feature thresholds that a tabular
Q-learning agent keeps tuning from detection feedback. A seeded traffic
simulator with injected attacks supplies ground truth for closed-loop runs.
"""

from .packets import (PacketRecord, DeviceMap, ParsedCapture, parse_pcap,
                      parse_pcap_stream, parse_summary_csv, write_summary_csv,
                      BadMagic, Truncated, SchemaMismatch, RowError)
from .windows import (Window, FeatureKind, FeatureDistribution, assign_windows,
                      build_distribution, entropy_series, write_entropy_csv,
                      UnsortedInput, PROTOCOL, SRC_IP_RECEIVED, DST_IP_SENT,
                      PORT_SENT, PORT_RECEIVED)
from .entropy import (EntropyConfig, shannon_entropy, renyi_entropy,
                      normalized_entropy, kl_divergence, renyi_divergence,
                      EmptyDistribution, AlphaIsOne, FeatureMismatch)
from .detector import (ThresholdEntry, ThresholdVector, UtilityParams,
                       ConfusionCounts, Verdict, CombinationPolicy,
                       evaluate_feature, combine_verdicts, update_confusion,
                       period_reward, period_rates, NoMeasurement,
                       ALARM_IF_BELOW, ALARM_IF_ABOVE)
from .qlearn import (AgentConfig, StateId, QTable, ThresholdAgent, WindowSample,
                     EpisodeResult, discretize_state, select_action, q_update,
                     greedy_policy, run_episode, train, StreamExhausted,
                     FingerprintMismatch, SchemaVersionMismatch)
# The function simulate.simulate is not re-exported at package level: that
# would shadow the submodule of the same name. Use entroguard.simulate.simulate.
from .simulate import (DeviceProfile, AttackSpec, Schedule, ScheduleConfig,
                       Scenario, GroundTruth, generate_benign, inject_attack,
                       mutative_schedule, derive_ground_truth,
                       labels_csv, parse_labels_csv, UnknownTarget)
from .experiment import (ExperimentConfig, FeatureSpec, RunReport, run_compare,
                         run_training, build_pipeline, emit_metrics,
                         persist_state, load_state, load_config,
                         calibrate_static_thresholds, ConfigError, InputError)

__version__ = "0.1.0"
