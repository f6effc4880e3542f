// Pure HTML renderers. Each function maps a service payload to a markup
// string; app.ts only assigns the results to innerHTML and wires events.
// Keeping these pure lets the tests compare rendered values against the
// formatted payload fields directly.

import type {
  ApiErrorBody,
  CandidateEntry,
  CandidatesResponse,
  CommunityResponse,
  Recommendation,
} from './api.js';
import { formatDistance, formatKwh, formatRatio, formatScrDelta } from './format.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderDecisionBadge(decision: Recommendation['decision']): string {
  return `<span class="badge badge-${decision.toLowerCase()}">${decision}</span>`;
}

// Production vs consumption over an average day, as a fixed-size SVG.
export function renderDayChart(production: number[], consumption: number[]): string {
  const width = 480;
  const height = 160;
  const pad = 8;
  const peak = Math.max(...production, ...consumption, 1e-9);
  const x = (h: number) => pad + (h * (width - 2 * pad)) / 23;
  const y = (v: number) => height - pad - (v / peak) * (height - 2 * pad);
  const points = (series: number[]) => series.map((v, h) => `${x(h).toFixed(1)},${y(v).toFixed(1)}`).join(' ');
  return [
    `<svg class="day-chart" viewBox="0 0 ${width} ${height}" role="img" aria-label="average day">`,
    `<polyline class="line-production" fill="none" points="${points(production)}"></polyline>`,
    `<polyline class="line-consumption" fill="none" points="${points(consumption)}"></polyline>`,
    '</svg>',
  ].join('');
}

export function renderCommunity(payload: CommunityResponse): string {
  const { community, report } = payload;
  const stats = [
    ['Shared energy', formatKwh(report.shared_energy)],
    ['Production', formatKwh(report.total_production)],
    ['Consumption', formatKwh(report.total_consumption)],
    ['Self-consumption', formatRatio(report.self_consumption_ratio, report.total_production)],
    ['Self-sufficiency', formatRatio(report.self_sufficiency, report.total_consumption)],
    ['Exported', formatKwh(report.exported)],
    ['Imported', formatKwh(report.imported)],
    ['Members', String(community.member_count)],
    ['Storage', formatKwh(community.total_storage_capacity)],
  ]
    .map(([label, value]) => `<div class="stat"><span class="stat-label">${label}</span><span class="stat-value">${value}</span></div>`)
    .join('');
  return [
    `<div class="community-header"><h2>Community</h2><span class="revision" data-revision="${payload.revision}">revision ${payload.revision}</span></div>`,
    `<div class="stats">${stats}</div>`,
    renderDayChart(payload.avg_hourly_production, payload.avg_hourly_consumption),
    `<div class="member-list">${community.member_ids.map((id) => `<span class="member">${escapeHtml(id)}</span>`).join('')}</div>`,
  ].join('');
}

export function renderRecommendation(rec: Recommendation): string {
  return [
    `<div class="recommendation" data-candidate="${escapeHtml(rec.candidate_id)}">`,
    `<div class="rec-header"><strong>${escapeHtml(rec.candidate_id)}</strong>${renderDecisionBadge(rec.decision)}</div>`,
    '<dl class="rec-facts">',
    `<dt>Marginal shared</dt><dd class="marginal-shared">${formatKwh(rec.marginal_shared_kwh)}</dd>`,
    `<dt>Marginal self-consumption</dt><dd>${formatScrDelta(rec.marginal_scr)}</dd>`,
    `<dt>Cluster</dt><dd>#${rec.cluster.index} (distance ${formatDistance(rec.cluster.distance)})</dd>`,
    `<dt>Mix fit</dt><dd>${rec.mix_fit.toFixed(1)}</dd>`,
    '</dl>',
    '</div>',
  ].join('');
}

export function renderCandidateEntry(entry: CandidateEntry): string {
  const body = entry.recommendation
    ? renderRecommendation(entry.recommendation)
    : renderInlineError(entry.error ?? { error: 'Unscored', detail: 'no score available' });
  const actions = entry.recommendation
    ? `<div class="actions">
        <button class="btn-admit" data-action="admit" data-candidate="${escapeHtml(entry.candidate_id)}">Admit</button>
        <button class="btn-reject" data-action="reject" data-candidate="${escapeHtml(entry.candidate_id)}">Reject</button>
      </div>`
    : `<div class="actions">
        <button class="btn-reject" data-action="reject" data-candidate="${escapeHtml(entry.candidate_id)}">Reject</button>
      </div>`;
  return `<li class="candidate" data-candidate="${escapeHtml(entry.candidate_id)}">${body}${actions}</li>`;
}

export function renderCandidateList(payload: CandidatesResponse): string {
  if (payload.candidates.length === 0) {
    return '<p class="empty">No pending candidates. Upload a consumption CSV to evaluate one.</p>';
  }
  return `<ul class="candidate-list">${payload.candidates.map(renderCandidateEntry).join('')}</ul>`;
}

export function renderInlineError(error: ApiErrorBody): string {
  return `<p class="error"><strong>${escapeHtml(error.error)}</strong> ${escapeHtml(error.detail)}</p>`;
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner banner-error">${escapeHtml(message)}</div>`;
}

export function renderStaleBanner(): string {
  return '<div class="banner banner-stale">Community changed on the server; view refreshed. Please retry.</div>';
}
