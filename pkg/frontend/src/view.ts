/**
 * DOM rendering: one characteristic per screen.
 *
 * Answer buttons are created exactly from the view's answer list, in
 * order; rubric help (when the node carries it) renders as an expandable
 * block under each option. The explanation passage appears only when the
 * view carries it, which the server restricts to explanation-branch nodes.
 */

import type { SessionController, SessionView } from './session.js';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderProgress(doc: Document, view: SessionView): HTMLElement {
  const header = el(doc, 'header', 'progress');
  const progress = view.progress;
  if (progress) {
    const mean =
      progress.meanElapsedSeconds === null ? 'n/a' : `${progress.meanElapsedSeconds.toFixed(1)}s`;
    header.appendChild(
      el(
        doc,
        'span',
        'progress-counts',
        `items ${progress.itemsDone}/${progress.itemsTotal} · ${progress.traversalsRemaining} traversals left · mean ${mean}`,
      ),
    );
  }
  if (view.warning) {
    header.appendChild(el(doc, 'span', 'warning', `⚠ ${view.warning}`));
  }
  return header;
}

function renderItem(doc: Document, view: SessionView): HTMLElement {
  const section = el(doc, 'section', 'item');
  section.appendChild(el(doc, 'p', 'item-question', view.inputText ?? ''));
  if (view.treeTarget === 'output') {
    section.appendChild(el(doc, 'p', 'item-answer', view.outputText ?? ''));
    if (view.explanationText) {
      section.appendChild(el(doc, 'p', 'item-explanation', view.explanationText));
    }
  }
  return section;
}

function renderQuestion(doc: Document, view: SessionView, controller: SessionController): HTMLElement {
  const section = el(doc, 'section', 'question');
  section.appendChild(el(doc, 'h2', 'prompt', view.prompt ?? ''));
  const options = el(doc, 'div', 'options');
  for (const answer of view.answers ?? []) {
    const wrapper = el(doc, 'div', 'option');
    const button = el(doc, 'button', 'answer', answer.replace(/_/g, ' '));
    button.dataset.answer = answer;
    button.addEventListener('click', () => {
      void controller.answer(answer);
    });
    wrapper.appendChild(button);
    const help = view.answerHelp?.[answer];
    if (help) {
      const details = el(doc, 'details', 'answer-help');
      details.appendChild(el(doc, 'summary', undefined, 'what this level means'));
      details.appendChild(el(doc, 'p', undefined, help));
      wrapper.appendChild(details);
    }
    options.appendChild(wrapper);
  }
  section.appendChild(options);
  return section;
}

function renderBanner(doc: Document, view: SessionView, controller: SessionController): HTMLElement {
  const section = el(doc, 'section', `banner banner-${view.banner?.label ?? ''}`);
  if (view.banner?.label === 'bad') {
    section.appendChild(el(doc, 'h2', 'banner-label', 'Composite outcome: bad'));
    section.appendChild(
      el(
        doc,
        'p',
        'banner-detail',
        `failed characteristic: ${view.banner.failed_at ?? '?'} (answer: ${view.banner.failing_answer ?? '?'})`,
      ),
    );
  } else {
    section.appendChild(el(doc, 'h2', 'banner-label', 'Composite outcome: good'));
  }
  const next = el(doc, 'button', 'banner-next', 'Next');
  next.addEventListener('click', () => {
    void controller.acknowledgeBanner();
  });
  section.appendChild(next);
  return section;
}

/** Render one session view into the root element. */
export function renderView(root: HTMLElement, view: SessionView, controller: SessionController): void {
  const doc = root.ownerDocument;
  root.textContent = '';
  root.appendChild(renderProgress(doc, view));
  switch (view.phase) {
    case 'loading':
      root.appendChild(el(doc, 'p', 'loading', 'loading…'));
      break;
    case 'question':
      root.appendChild(renderItem(doc, view));
      root.appendChild(renderQuestion(doc, view, controller));
      break;
    case 'banner':
      root.appendChild(renderBanner(doc, view, controller));
      break;
    case 'done':
      root.appendChild(el(doc, 'h2', 'done', 'All assigned work is finished. Thank you!'));
      break;
    case 'error':
      root.appendChild(el(doc, 'p', 'error', view.errorMessage ?? 'something went wrong'));
      break;
  }
}
