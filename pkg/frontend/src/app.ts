// DOM glue: fetches payloads, hands them to the pure renderers, and wires
// the upload / what-if / admit / reject actions. Mutations are serialized
// (one in flight) and always carry the last-seen revision.

import { ApiClient, ApiError } from './api.js';
import {
  renderCandidateList,
  renderCommunity,
  renderErrorBanner,
  renderInlineError,
  renderRecommendation,
  renderStaleBanner,
} from './render.js';

const api = new ApiClient('');

interface ViewState {
  revision: number | null;
  mutationInFlight: boolean;
}

const state: ViewState = { revision: null, mutationInFlight: false };

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function refresh(): Promise<void> {
  try {
    const community = await api.getCommunity();
    if (state.revision !== null && community.revision !== state.revision) {
      el('banner').innerHTML = renderStaleBanner();
    }
    state.revision = community.revision;
    el('community').innerHTML = renderCommunity(community);
    const candidates = await api.listCandidates();
    el('candidates').innerHTML = renderCandidateList(candidates);
  } catch (err) {
    el('banner').innerHTML = renderErrorBanner(err instanceof Error ? err.message : String(err));
  }
}

function clearBanner(): void {
  el('banner').innerHTML = '';
}

async function onUpload(event: Event): Promise<void> {
  event.preventDefault();
  clearBanner();
  const input = el('csv-input') as HTMLTextAreaElement;
  const idInput = el('candidate-id') as HTMLInputElement;
  el('upload-error').innerHTML = '';
  try {
    const created = await api.uploadCandidate(input.value, idInput.value || undefined);
    state.revision = created.revision;
    input.value = '';
    idInput.value = '';
    await showWhatif(created.candidate_id);
    await refresh();
  } catch (err) {
    if (err instanceof ApiError) {
      el('upload-error').innerHTML = renderInlineError(err.body);
    } else {
      el('banner').innerHTML = renderErrorBanner(String(err));
    }
  }
}

async function showWhatif(candidateId: string): Promise<void> {
  try {
    const rec = await api.whatif(candidateId);
    el('detail').innerHTML = renderRecommendation(rec);
  } catch (err) {
    if (err instanceof ApiError) {
      el('detail').innerHTML = renderInlineError(err.body);
    } else {
      throw err;
    }
  }
}

async function mutate(action: 'admit' | 'reject', candidateId: string): Promise<void> {
  if (state.mutationInFlight || state.revision === null) return;
  state.mutationInFlight = true;
  clearBanner();
  try {
    const result =
      action === 'admit' ? await api.admit(candidateId, state.revision) : await api.reject(candidateId, state.revision);
    state.revision = result.revision;
    el('detail').innerHTML = '';
    await refresh();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // someone else moved first: refetch, show the stale banner, let the
      // operator retry against the fresh revision
      state.revision = null;
      await refresh();
      el('banner').innerHTML = renderStaleBanner();
    } else if (err instanceof ApiError) {
      el('banner').innerHTML = renderErrorBanner(err.message);
    } else {
      el('banner').innerHTML = renderErrorBanner(String(err));
    }
  } finally {
    state.mutationInFlight = false;
  }
}

function onCandidateClick(event: Event): void {
  const target = event.target as HTMLElement;
  const action = target.dataset.action;
  const candidate = target.dataset.candidate;
  if (!candidate) {
    return;
  }
  if (action === 'admit' || action === 'reject') {
    void mutate(action, candidate);
  } else {
    void showWhatif(candidate);
  }
}

export function boot(): void {
  el('upload-form').addEventListener('submit', (e) => void onUpload(e));
  el('candidates').addEventListener('click', onCandidateClick);
  el('refresh').addEventListener('click', () => void refresh());
  void refresh();
}

if (typeof document !== 'undefined' && document.getElementById('community')) {
  boot();
}
