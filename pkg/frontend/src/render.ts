// Result rendering. Shows exactly what the service returned: no
// client-side renormalization, no client-side verdict.

import type { PredictResponse } from './api';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderResult(container: HTMLElement, result: PredictResponse): void {
  container.replaceChildren();

  const banner = el('div', result.suspected_mpox ? 'verdict suspected' : 'verdict clear');
  banner.setAttribute('data-role', 'verdict');
  banner.textContent = result.suspected_mpox
    ? 'Suspected mpox — please consult a physician promptly.'
    : 'Not a suspected mpox case.';
  container.append(banner);

  const bars = el('div', 'bars');
  bars.setAttribute('data-role', 'bars');
  const entries = Object.entries(result.probabilities).sort((a, b) => b[1] - a[1]);
  for (const [label, probability] of entries) {
    const row = el('div', 'bar-row');
    row.setAttribute('data-label', label);
    row.setAttribute('data-probability', String(probability));
    row.append(el('span', 'bar-label', label));
    const track = el('div', 'bar-track');
    const fill = el('div', 'bar-fill');
    fill.style.width = `${probability * 100}%`;
    track.append(fill);
    row.append(track);
    row.append(el('span', 'bar-value', `${(probability * 100).toFixed(1)}%`));
    bars.append(row);
  }
  container.append(bars);

  if (result.heatmap !== null) {
    const figure = el('figure', 'heatmap');
    const img = el('img');
    img.setAttribute('data-role', 'heatmap');
    img.alt = 'Model attention overlay';
    img.src = `data:image/png;base64,${result.heatmap}`;
    figure.append(img, el('figcaption', undefined, 'Where the model looked'));
    container.append(figure);
  }

  const advice = el('p', 'disclaimer', result.advice);
  advice.setAttribute('data-role', 'disclaimer');
  container.append(advice);
}

/** Failures never fabricate a verdict: only the error banner is shown. */
export function renderError(container: HTMLElement, message: string): void {
  container.replaceChildren();
  const banner = el('div', 'error-banner', message);
  banner.setAttribute('data-role', 'error');
  container.append(banner);
}

export function renderBusy(container: HTMLElement): void {
  container.replaceChildren(el('p', 'busy', 'Analyzing…'));
}
