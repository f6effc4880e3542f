// Typed client for the recmate decision service. The dashboard does no
// domain math of its own: everything it shows comes out of these payloads.

export interface HealthResponse {
  status: string;
  revision: number;
}

export interface ReportSummary {
  total_production: number;
  total_consumption: number;
  shared_energy: number;
  exported: number;
  imported: number;
  self_consumption_ratio: number;
  self_sufficiency: number;
}

export interface HourlyFlow {
  production: number;
  consumption: number;
  direct_use: number;
  charge: number;
  discharge: number;
  soc_end: number;
  shared: number;
  exported: number;
  imported: number;
}

export interface SharingReport extends ReportSummary {
  hourly_trace: HourlyFlow[];
}

export interface ProducerPayload {
  producer_id: string;
  p_max: number;
  avg_profile: number[];
  storage_capacity: number;
  storage_efficiency: number;
  storage_power_limit: number;
}

export interface CommunitySummary {
  member_ids: string[];
  member_count: number;
  producers: ProducerPayload[];
  horizon_hours: number;
  initial_soc: number;
  total_storage_capacity: number;
  start: string | null;
}

export interface CommunityResponse {
  revision: number;
  community: CommunitySummary;
  report: SharingReport;
  avg_hourly_production: number[];
  avg_hourly_consumption: number[];
}

export interface ClusterInfo {
  index: number;
  distance: number;
}

export type Decision = 'ADMIT' | 'REJECT' | 'REVIEW';

export interface Recommendation {
  candidate_id: string;
  cluster: ClusterInfo;
  marginal_shared_kwh: number;
  marginal_scr: number;
  mix_fit: number;
  decision: Decision;
  baseline: ReportSummary;
  with_candidate: ReportSummary;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}

export interface CandidateEntry {
  candidate_id: string;
  recommendation?: Recommendation | null;
  error?: ApiErrorBody | null;
}

export interface CandidatesResponse {
  revision: number;
  candidates: CandidateEntry[];
}

export interface CandidateCreated {
  candidate_id: string;
  revision: number;
}

export interface AdmitResponse {
  candidate_id: string;
  revision: number;
  report: SharingReport;
}

export interface RejectResponse {
  candidate_id: string;
  revision: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string = '') {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let body: ApiErrorBody;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = { error: `HTTP ${response.status}`, detail: response.statusText };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  getHealth(): Promise<HealthResponse> {
    return this.request('/api/health');
  }

  getCommunity(): Promise<CommunityResponse> {
    return this.request('/api/community');
  }

  listCandidates(): Promise<CandidatesResponse> {
    return this.request('/api/candidates');
  }

  uploadCandidate(csv: string, candidateId?: string): Promise<CandidateCreated> {
    return this.request('/api/candidates', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(candidateId ? { csv, candidate_id: candidateId } : { csv }),
    });
  }

  whatif(candidateId: string): Promise<Recommendation> {
    return this.request(`/api/whatif/${encodeURIComponent(candidateId)}`, { method: 'POST' });
  }

  // Mutations always carry the last-seen revision as If-Match so a
  // concurrent change surfaces as a 409 instead of silently clobbering.
  admit(candidateId: string, revision: number): Promise<AdmitResponse> {
    return this.request(`/api/admit/${encodeURIComponent(candidateId)}`, {
      method: 'POST',
      headers: { 'If-Match': String(revision) },
    });
  }

  reject(candidateId: string, revision: number): Promise<RejectResponse> {
    return this.request(`/api/reject/${encodeURIComponent(candidateId)}`, {
      method: 'POST',
      headers: { 'If-Match': String(revision) },
    });
  }
}
