// Wire types mirroring the service event schema. The UI consumes these
// records verbatim; it never derives probabilities or answers on its own.

export type Phase = "awaiting_teacher" | "awaiting_supervisor" | "closed";

export type Speaker = "teacher" | "student" | "supervisor_as_student";

export interface DistributionPayload {
  mean_probs: number[];
  predictive_entropy: number;
  sample_count: number;
  argmax_agreement: number;
}

export interface AnnotationPayload {
  text: string;
  attributes: { attribute: string; span: [number, number] }[];
  values: { value: string; span: [number, number] }[];
  figure: string;
  figure_confidence: number;
  value_presence: string;
  presence_confidence: number;
}

export interface CandidatePayload {
  attribute: string;
  value: string | null;
  confidence: number;
  label: boolean;
}

export interface DecisionPayload {
  verdict: "proceed" | "escalate";
  triggered_by: string;
  diagnostics: {
    entropy: number;
    tau_act: number;
    entity_confidence: number;
    tau_entity: number;
    template_available: boolean;
    scenario_consistent: boolean;
    argmax_agreement: number;
  };
}

export interface AnalysisPayload {
  act: string;
  distribution: DistributionPayload;
  annotation: AnnotationPayload;
  candidates: CandidatePayload[];
  decision: DecisionPayload;
  resolved_figure: string;
}

export interface TurnPayload {
  turn_id: number;
  speaker: Speaker;
  text: string;
  timestamp: number;
  analysis: AnalysisPayload | null;
  references: number | null;
}

export interface TicketPayload {
  ticket_id: string;
  session_id: string;
  turn_id: number;
  utterance: string;
  created_at: number;
  status: "open" | "claimed" | "resolved";
  claimant: string | null;
  resolved_at: number | null;
  reply: string | null;
  diagnostics: {
    distribution: DistributionPayload;
    annotation: AnnotationPayload;
    candidates: CandidatePayload[];
    decision: DecisionPayload;
  };
}

export interface UiEvent {
  type: "turn" | "ticket" | "phase" | "survey";
  session_id: string;
  seq: number;
  payload: any;
  phase: Phase;
  snapshot?: boolean;
}

export const ACT_LABELS = ["probing", "factual", "expository", "other"] as const;
