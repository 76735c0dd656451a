/**
 * Wire types for the environment service. Field names mirror the JSON
 * the service emits; nothing here is reshaped or renamed.
 */

export interface RewardBreakdown {
  answer_reward: number;
  format_reward: number;
  total: number;
}

export interface InstanceMeta {
  n_support_total: number;
  n_support_kept: number;
  n_distract: number;
  token_estimate: number;
  under_budget: boolean;
}

export interface InstanceView {
  id: string;
  ratio: number;
  question: string;
  context: string[];
  gold_answers: string[];
  // u64 on the wire; values above 2^53 lose precision in a JS number.
  // Display-only here - the client never sends it back.
  rng_seed: number;
  meta: InstanceMeta;
}

export interface SampleResult {
  id: string;
  ratio: number;
  prompt: string;
  instance: InstanceView;
}

export interface PerResponseTerms {
  advantage: number;
  clipped: number;
  kl: number;
}

export interface ObjectiveResult {
  objective: number;
  per_response: PerResponseTerms[];
  config: {
    clip_epsilon: number;
    kl_coeff: number;
    std_floor: number;
  };
}

export interface GroupScoreResult {
  rewards: RewardBreakdown[];
  advantages: number[];
  objective?: ObjectiveResult;
}

export interface ServiceStats {
  instances: Record<string, number>;
  episodes: number;
  per_ratio: Record<
    string,
    { episodes: number; mean_total: number; mean_answer: number }
  >;
}

export interface SampleFilters {
  ratio?: number;
  seed?: number;
}

export interface GroupScoreOptions {
  ratiosNewOverOld?: number[];
  ratiosRefOverNew?: number[];
  clipEpsilon?: number;
  klCoeff?: number;
  stdFloor?: number;
}

/** Terminal result of the single scoring step in an episode. */
export interface StepResult {
  rewards: RewardBreakdown;
  done: true;
}
