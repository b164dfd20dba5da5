from ._agents import Agent, AgentFailed, CommandAgent, ScriptedAgent, parse_agent
from ._curriculum import DEFAULT_THRESHOLD, CurriculumState, UnknownTask, filter_batch
from ._passk import KOutOfRange, PassAtK, RewardMatrix, estimate_pass_at_k, pass_at_k, passk_report
from ._reward import RewardOutcome, answer_judge_prompt, match_answer, normalize_answer, reward
from ._rollout import RolloutResult, run_curriculum, run_rollouts

__all__ = [
    "Agent",
    "AgentFailed",
    "CommandAgent",
    "ScriptedAgent",
    "parse_agent",
    "DEFAULT_THRESHOLD",
    "CurriculumState",
    "UnknownTask",
    "filter_batch",
    "KOutOfRange",
    "PassAtK",
    "RewardMatrix",
    "estimate_pass_at_k",
    "pass_at_k",
    "passk_report",
    "RewardOutcome",
    "answer_judge_prompt",
    "match_answer",
    "normalize_answer",
    "reward",
    "RolloutResult",
    "run_curriculum",
    "run_rollouts",
]
