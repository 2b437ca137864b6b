"""Test running click commands generically.
"""

import unittest

import click

from ox_slap.core import c2g, decorators


@click.command()
@click.option('--n-points', '-n', default=3, help='Number of points.')
@click.option('--spacing-nm', type=float, required=True,
              help='Distance between points in nm.')
@click.option('--label', multiple=True, help='Labels to attach.')
@click.option('--centered/--no-centered', default=False, help=(
    'If centered then put the middle point at 0.'))
def grid_cmd(n_points, spacing_nm, label, centered):
    "Make a list of grid positions."

    offset = (n_points - 1) / 2 if centered else 0
    result = [(i - offset) * spacing_nm for i in range(n_points)]
    if label:
        result.extend(label)
    return result


class TestGridCmd(unittest.TestCase):
    """Test running grid_cmd through ClickToGeneric.
    """

    @decorators.watched  # decorator is optional
    def test_default(self):
        "Test with default arguments."
        result = c2g.ClickToGeneric(grid_cmd).handle_request(
            {'spacing_nm': 2.0})
        self.assertEqual(result, [0.0, 2.0, 4.0])

    def test_string_values(self):
        "Strings are converted by the click types."
        result = c2g.ClickToGeneric(grid_cmd).handle_request(
            {'spacing_nm': '1.5', 'n_points': '2'})
        self.assertEqual(result, [0.0, 1.5])

    def test_flag_and_multiple(self):
        "Flags and multiple options."
        result = c2g.ClickToGeneric(grid_cmd).handle_request(
            {'spacing_nm': 1.0, 'centered': True, 'label': ['a', 'b']})
        self.assertEqual(result, [-1.0, 0.0, 1.0, 'a', 'b'])

    def test_missing_required(self):
        "Required options must be given."
        with self.assertRaises(ValueError):
            c2g.ClickToGeneric(grid_cmd).handle_request()

    def test_unknown_option(self):
        "Unknown options are rejected."
        with self.assertRaises(TypeError):
            c2g.ClickToGeneric(grid_cmd).handle_request(
                {'spacing_nm': 1.0, 'spacing': 2})

    def test_skip(self):
        "Skipped options are not offered."
        fields = c2g.ClickToGeneric(grid_cmd, skip_opt_re='^label$').fields()
        self.assertNotIn('label', fields)
        self.assertEqual(fields['n_points'].data, 3)

    def test_field_defaults(self):
        "Options without a default give None, or () when multiple."
        fields = c2g.ClickToGeneric(grid_cmd).fields()
        self.assertIsNone(fields['spacing_nm'].data)
        self.assertTrue(fields['spacing_nm'].required)
        self.assertEqual(fields['label'].data, ())
        self.assertIs(fields['centered'].data, False)


if __name__ == '__main__':
    unittest.main()
