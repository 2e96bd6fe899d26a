"""eegdesk: agent-orchestrated EEG analysis engine.

Parses EDF recordings into an immutable in-memory model, exposes a
granularity-typed toolbox (statistical features plus pluggable window
classifiers), and drives it three ways: a planning loop with session
memory, hierarchical coarse-to-fine event detection, and structured
clinical report generation. A file-backed HTTP service and a CLI sit on
top. All backends (chat planner, embeddings, classifiers) are pluggable
and default to deterministic offline implementations.
"""

from .agent import (
    AgentTrace,
    Budget,
    ChatNarrator,
    ChatPlanner,
    Context,
    FinalAnswer,
    ScriptedNarrator,
    ScriptedPolicy,
    SessionMemory,
    TaskResult,
    ToolCall,
    run_task,
)
from .classifiers import (
    TOOL_SPECS,
    BaselineBackend,
    ClassProbabilities,
    RemoteBackend,
    ScriptedBackend,
    ToolSpec,
    baseline_rules,
    classify,
)
from .detection import (
    DetectionConfig,
    DetectionResult,
    EvalReport,
    EventInterval,
    detect,
    evaluate,
    iou,
    merge_adjacent,
)
from .edf import parse_edf, parse_edf_file, serialize_edf
from .exploration import ExplorationSummary, FusionConfig, explore, fuse, partition
from .features import compute_amplitude, compute_psd, compute_symmetry
from .knowledge import HashEmbedding, KnowledgeBase, KnowledgeEntry, RemoteEmbedding
from .recording import (
    BaseInfoSummary,
    ChannelInfo,
    PatientInfo,
    Recording,
    Segment,
    base_info,
    segment_over,
    slice_segment,
)
from .reporting import (
    ChatDecider,
    DeterministicDecider,
    ReportDraft,
    ReportResult,
    generate_report,
    render,
)
from .store import FileStore
from .toolbox import ToolRegistry, ToolResult

__version__ = "0.1.0"

__all__ = [
    "AgentTrace", "Budget", "ChatNarrator", "ChatPlanner", "Context",
    "FinalAnswer", "ScriptedNarrator", "ScriptedPolicy", "SessionMemory",
    "TaskResult", "ToolCall", "run_task",
    "TOOL_SPECS", "BaselineBackend", "ClassProbabilities", "RemoteBackend",
    "ScriptedBackend", "ToolSpec", "baseline_rules", "classify",
    "DetectionConfig", "DetectionResult", "EvalReport", "EventInterval",
    "detect", "evaluate", "iou", "merge_adjacent",
    "parse_edf", "parse_edf_file", "serialize_edf",
    "ExplorationSummary", "FusionConfig", "explore", "fuse", "partition",
    "compute_amplitude", "compute_psd", "compute_symmetry",
    "HashEmbedding", "KnowledgeBase", "KnowledgeEntry", "RemoteEmbedding",
    "BaseInfoSummary", "ChannelInfo", "PatientInfo", "Recording", "Segment",
    "base_info", "segment_over", "slice_segment",
    "ChatDecider", "DeterministicDecider", "ReportDraft", "ReportResult",
    "generate_report", "render",
    "FileStore", "ToolRegistry", "ToolResult",
]
