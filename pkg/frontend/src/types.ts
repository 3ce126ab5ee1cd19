// Wire types mirrored from the review API (docs/review-api.md).

export type Status = "candidate" | "verified_true" | "verified_false";

export interface Counts {
  short_wall: number;
  railing: number;
  stairs: number;
  total: number;
}

export interface Detection {
  class: string;
  confidence: number;
  polygon: [number, number][];
}

export interface StreetSlot {
  slot: string;
  available: boolean;
  image_size: [number, number];
  detections: Detection[];
}

export interface CandidateView {
  id: string;
  survey_id: string;
  point: { lat: number; lon: number };
  status: Status;
  counts: Counts;
  probability: number;
  positive: boolean;
  verdict_note: string | null;
  sat: { available: boolean; quadrant_probs: number[] | null };
  street: StreetSlot[];
}

export interface Stats {
  n_coordinates: number;
  n_positive: number;
  n_verified_true: number;
  n_verified_false: number;
  precision: number | null;
}

export interface CandidatePage {
  items: CandidateView[];
  page: number;
  page_size: number;
  total: number;
}
