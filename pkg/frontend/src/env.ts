/**
 * Gym-flavored wrapper over the service: reset() draws an instance and
 * returns its rendered prompt, step() submits the model's response and
 * returns the reward breakdown. Episodes are single-turn - the whole
 * response is one scored action - so every episode is exactly one reset
 * followed by exactly one step.
 */

import { SieClient, UsageError } from './client.js';
import type { SampleFilters, StepResult } from './types.js';

export interface EnvHandle {
  readonly instanceId: string;
  readonly prompt: string;
  readonly ratio: number;
  /** True once the episode's single step has been taken. */
  readonly done: boolean;
}

export class SingleTurnEnv {
  private readonly client: SieClient;
  private current: { instanceId: string; prompt: string; ratio: number; done: boolean } | null =
    null;

  constructor(client: SieClient) {
    this.client = client;
  }

  /** Draw an instance (optionally filtered by ratio, optionally seeded). */
  async reset(filters: SampleFilters = {}): Promise<EnvHandle> {
    const result = await this.client.sample(filters);
    this.current = {
      instanceId: result.id,
      prompt: result.prompt,
      ratio: result.ratio,
      done: false,
    };
    return { ...this.current };
  }

  /** Submit the response for the current episode. Terminal by definition. */
  async step(response: string): Promise<StepResult> {
    if (this.current === null) {
      throw new UsageError('step() before reset(): no active episode');
    }
    if (this.current.done) {
      throw new UsageError(
        'episode already scored: single-turn environment, reset() to start another',
      );
    }
    const rewards = await this.client.score(this.current.instanceId, response);
    this.current.done = true;
    return { rewards, done: true };
  }

  /** Handle for the episode in progress, or null before the first reset. */
  get handle(): EnvHandle | null {
    return this.current === null ? null : { ...this.current };
  }
}
