/** Wire payloads of the judgment server. */

export type TreeTarget = 'input' | 'output';

export interface Progress {
  items_total: number;
  items_done: number;
  traversals_total: number;
  traversals_remaining: number;
  judgments_this_item?: number;
}

export interface ItemTexts {
  id: string;
  input_text: string;
  output_text: string;
  /** Present only when the current node judges the explanation passage. */
  explanation_text?: string;
}

export interface NodeView {
  id: string;
  prompt: string;
  characteristic: string;
  answers: string[];
  answer_help: Record<string, string>;
}

export interface TaskPayload {
  status: 'task';
  campaign_id: string;
  item_id: string;
  tree_target: TreeTarget;
  item: ItemTexts;
  node: NodeView;
  progress: Progress;
}

export interface DonePayload {
  status: 'done';
  progress: Progress;
}

export type NextPayload = TaskPayload | DonePayload;

export interface JudgmentBody {
  item_id: string;
  tree_target: TreeTarget;
  node_id: string;
  answer: string;
  elapsed_seconds: number;
  idempotency_key: string;
}

export interface Outcome {
  label: 'good' | 'bad';
  failed_at?: string;
  failing_answer?: string;
}

export interface TerminatedPayload {
  status: 'terminated';
  item_id: string;
  tree_target: TreeTarget;
  outcome: Outcome;
  judgments: number;
  sequence_no: number;
}

export interface InProgressPayload {
  status: 'in_progress';
  item_id: string;
  tree_target: TreeTarget;
  next_node_id: string;
  judgments: number;
  sequence_no: number;
}

export type JudgmentResponse = TerminatedPayload | InProgressPayload;

export interface ErrorBody {
  error: { code: string; message: string; [key: string]: unknown };
}
