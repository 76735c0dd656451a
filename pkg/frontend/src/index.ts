export {
  ApiError,
  NetworkError,
  SieClient,
  UsageError,
  type ClientConfig,
} from './client.js';
export { SingleTurnEnv, type EnvHandle } from './env.js';
export type {
  GroupScoreOptions,
  GroupScoreResult,
  InstanceMeta,
  InstanceView,
  ObjectiveResult,
  PerResponseTerms,
  RewardBreakdown,
  SampleFilters,
  SampleResult,
  ServiceStats,
  StepResult,
} from './types.js';
