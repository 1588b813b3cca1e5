/**
 * Session state machine for one evaluator.
 *
 * The controller never routes locally: the next node always comes from
 * the server response. It owns the per-prompt stopwatch (started when the
 * prompt is rendered, stopped at the first selection; retries reuse the
 * measured value) and an in-flight guard so duplicated clicks can never
 * produce two submissions.
 */

import { ApiClient, type SubmitResult } from './api.js';
import type { JudgmentBody, Outcome, Progress, TaskPayload, TreeTarget } from './types.js';

export type Phase = 'loading' | 'question' | 'banner' | 'done' | 'error';

export interface SessionView {
  phase: Phase;
  itemId?: string;
  treeTarget?: TreeTarget;
  inputText?: string;
  outputText?: string;
  /** Only set when the current node judges the explanation passage. */
  explanationText?: string;
  prompt?: string;
  characteristic?: string;
  answers?: string[];
  answerHelp?: Record<string, string>;
  progress?: ProgressView;
  banner?: Outcome & { treeTarget: TreeTarget; itemId: string };
  warning?: string;
  errorMessage?: string;
}

export interface ProgressView {
  itemsDone: string;
  itemsTotal: string;
  traversalsRemaining: string;
  meanElapsedSeconds: number | null;
}

export type RenderFn = (view: SessionView) => void;

function defaultKeyGenerator(): string {
  const cryptoApi = (globalThis as { crypto?: Crypto }).crypto;
  if (cryptoApi?.randomUUID) {
    return cryptoApi.randomUUID();
  }
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

/** Progress fields may be absent in a malformed payload: render a
 * placeholder and keep the session going, but say so. */
function progressView(progress: Partial<Progress> | undefined, elapsed: number[]): {
  view: ProgressView;
  warning?: string;
} {
  const mean = elapsed.length ? elapsed.reduce((a, b) => a + b, 0) / elapsed.length : null;
  const missing: string[] = [];
  const show = (value: number | undefined, field: string): string => {
    if (typeof value === 'number') return String(value);
    missing.push(field);
    return '?';
  };
  const view: ProgressView = {
    itemsDone: show(progress?.items_done, 'items_done'),
    itemsTotal: show(progress?.items_total, 'items_total'),
    traversalsRemaining: show(progress?.traversals_remaining, 'traversals_remaining'),
    meanElapsedSeconds: mean,
  };
  return missing.length
    ? { view, warning: `progress fields missing: ${missing.join(', ')}` }
    : { view };
}

export class SessionController {
  private view: SessionView = { phase: 'loading' };
  private task: TaskPayload | null = null;
  private promptShownAt = 0;
  private inFlight = false;
  private readonly elapsedHistory: number[] = [];

  constructor(
    private readonly client: ApiClient,
    private readonly render: RenderFn,
    private readonly clock: () => number = () => Date.now(),
    private readonly newKey: () => string = defaultKeyGenerator,
  ) {}

  current(): SessionView {
    return this.view;
  }

  private show(view: SessionView): void {
    this.view = view;
    this.render(view);
  }

  /** Fetch and display the next task (or the done screen). */
  async start(): Promise<void> {
    this.show({ phase: 'loading' });
    let payload;
    try {
      payload = await this.client.nextTask();
    } catch (error) {
      this.show({ phase: 'error', errorMessage: String(error) });
      return;
    }
    if (payload.status === 'done') {
      const { view, warning } = progressView(payload.progress, this.elapsedHistory);
      this.show({ phase: 'done', progress: view, warning });
      return;
    }
    this.task = payload;
    this.promptShownAt = this.clock();
    const { view, warning } = progressView(payload.progress, this.elapsedHistory);
    this.show({
      phase: 'question',
      itemId: payload.item_id,
      treeTarget: payload.tree_target,
      inputText: payload.item.input_text,
      outputText: payload.item.output_text,
      explanationText: payload.item.explanation_text,
      prompt: payload.node.prompt,
      characteristic: payload.node.characteristic,
      answers: [...payload.node.answers],
      answerHelp: { ...payload.node.answer_help },
      progress: view,
      warning,
    });
  }

  /**
   * Submit the selected answer. Ignored unless a question is on screen
   * and no submission is in flight, so double-clicks cannot double-post.
   */
  async answer(token: string): Promise<void> {
    if (this.inFlight || this.view.phase !== 'question' || !this.task) {
      return;
    }
    if (!this.task.node.answers.includes(token)) {
      return;
    }
    this.inFlight = true;
    const elapsedSeconds = Math.max(0, (this.clock() - this.promptShownAt) / 1000);
    const body: JudgmentBody = {
      item_id: this.task.item_id,
      tree_target: this.task.tree_target,
      node_id: this.task.node.id,
      answer: token,
      elapsed_seconds: elapsedSeconds,
      idempotency_key: this.newKey(),
    };
    let result: SubmitResult;
    try {
      result = await this.client.postJudgment(body);
    } catch (error) {
      this.inFlight = false;
      this.show({ ...this.view, phase: 'error', errorMessage: String(error) });
      return;
    }
    this.inFlight = false;
    if (result.kind === 'stale') {
      // another tab (or a replayed retry) advanced this traversal: refetch silently
      await this.start();
      return;
    }
    this.elapsedHistory.push(elapsedSeconds);
    const payload = result.payload;
    if (payload.status === 'terminated') {
      this.task = null;
      this.show({
        phase: 'banner',
        itemId: payload.item_id,
        treeTarget: payload.tree_target,
        banner: { ...payload.outcome, treeTarget: payload.tree_target, itemId: payload.item_id },
      });
      return;
    }
    // in progress: the server told us the next node; refetch renders it
    await this.start();
  }

  /** Leave the termination banner and load the next task. */
  async acknowledgeBanner(): Promise<void> {
    if (this.view.phase !== 'banner') {
      return;
    }
    await this.start();
  }
}
